//! JSON test specifications: the external interface of the CLI. The serde
//! definitions are strict (unknown fields rejected) and mirror the schema
//! shipped in `schema/testspec.schema.json`.

use serde::{Deserialize, Serialize};

use crate::error::{FbstError, Result};
use crate::hypothesis::Hypothesis;
use crate::model::{Conjugate, DataSet, SuffStats};
use crate::reference::{ReferenceDensity, ReferenceKind};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub model: ModelSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    pub hypothesis: HypothesisSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub decision: DecisionSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    pub prior: PriorSpec,
    pub data: DataSpec,
}

/// Prior hyperparameters; which fields apply depends on the family.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
}

/// Either sufficient statistics or raw observations (reduced on ingestion).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub successes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<u64>,
    /// Raw observations; interpreted per family and reduced to sufficient
    /// statistics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSpec {
    #[default]
    Uniform,
    Jeffreys,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HypothesisSpec {
    /// theta = value (full coordinate vector).
    Point { value: Vec<f64> },
    /// Fix a subset of coordinates by index.
    FixCoordinates { fixed: Vec<(usize, f64)> },
    /// Named built-in: "hardy_weinberg" or "equal_means".
    Named { name: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: MethodSpec,
    #[serde(default)]
    pub tuning: TuningSpec,
}

fn default_n() -> usize {
    100_000
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            n: default_n(),
            seed: 0,
            method: MethodSpec::default(),
            tuning: TuningSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    #[default]
    Direct,
    Mcmc,
    Quadrature,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    #[serde(default = "default_step")]
    pub initial_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default = "default_thin")]
    pub thinning: usize,
}

fn default_step() -> f64 {
    1.0
}

fn default_thin() -> usize {
    1
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec { initial_step: 1.0, burn_in: None, thinning: 1 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DecisionSpec {
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
}

fn default_c1() -> f64 {
    0.05
}

fn default_c2() -> f64 {
    0.95
}

impl Default for DecisionSpec {
    fn default() -> Self {
        DecisionSpec { c1: 0.05, c2: 0.95 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// When set, the W(v) curve is exported to this CSV path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_curve_csv: Option<String>,
}

impl TestSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| FbstError::InvalidSpec(e.to_string()))
    }

    /// Build the conjugate prior from the model block.
    pub fn prior(&self) -> Result<Conjugate> {
        let p = &self.model.prior;
        let missing = |what: &str| {
            FbstError::InvalidSpec(format!(
                "family '{}' needs prior field '{what}'",
                self.model.family
            ))
        };
        let prior = match self.model.family.as_str() {
            "beta_bernoulli" => Conjugate::Beta {
                a: p.a.ok_or_else(|| missing("a"))?,
                b: p.b.ok_or_else(|| missing("b"))?,
            },
            "dirichlet_multinomial" => Conjugate::Dirichlet {
                alpha: p.alpha.clone().ok_or_else(|| missing("alpha"))?,
            },
            "normal_known_var" => Conjugate::NormalKnownVar {
                mean: p.mean.ok_or_else(|| missing("mean"))?,
                sd: p.sd.ok_or_else(|| missing("sd"))?,
                sigma: p.sigma.ok_or_else(|| missing("sigma"))?,
            },
            "normal_mean_var" => Conjugate::NormalInvGamma {
                mu0: p.mu0.ok_or_else(|| missing("mu0"))?,
                kappa0: p.kappa0.ok_or_else(|| missing("kappa0"))?,
                a0: p.a0.ok_or_else(|| missing("a0"))?,
                b0: p.b0.ok_or_else(|| missing("b0"))?,
            },
            "gamma_poisson" => Conjugate::GammaRate {
                a: p.a.ok_or_else(|| missing("a"))?,
                b: p.b.ok_or_else(|| missing("b"))?,
            },
            other => {
                return Err(FbstError::InvalidSpec(format!("unknown family '{other}'")))
            }
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Build the dataset from the data block, reducing raw observations.
    pub fn dataset(&self) -> Result<DataSet> {
        let d = &self.model.data;
        let missing = |what: &str| {
            FbstError::InvalidSpec(format!(
                "family '{}' needs data field '{what}'",
                self.model.family
            ))
        };
        match self.model.family.as_str() {
            "beta_bernoulli" => {
                if let Some(obs) = &d.obs {
                    let bools: Vec<bool> = obs.iter().map(|&x| x != 0.0).collect();
                    DataSet::from_bernoulli_obs(&bools)
                } else {
                    DataSet::new(SuffStats::Bernoulli {
                        successes: d.successes.ok_or_else(|| missing("successes"))?,
                        trials: d.trials.ok_or_else(|| missing("trials"))?,
                    })
                }
            }
            "dirichlet_multinomial" => {
                if let Some(obs) = &d.obs {
                    let k = self
                        .model
                        .prior
                        .alpha
                        .as_ref()
                        .map(|a| a.len())
                        .ok_or_else(|| missing("counts"))?;
                    let cats: Vec<usize> = obs.iter().map(|&x| x as usize).collect();
                    DataSet::from_categorical_obs(&cats, k)
                } else {
                    DataSet::new(SuffStats::Multinomial {
                        counts: d.counts.clone().ok_or_else(|| missing("counts"))?,
                    })
                }
            }
            "normal_known_var" | "normal_mean_var" => {
                if let Some(obs) = &d.obs {
                    DataSet::from_normal_obs(obs)
                } else {
                    DataSet::new(SuffStats::Normal {
                        n: d.n.ok_or_else(|| missing("n"))?,
                        sum: d.sum.ok_or_else(|| missing("sum"))?,
                        sum_sq: d.sum_sq.ok_or_else(|| missing("sum_sq"))?,
                    })
                }
            }
            "gamma_poisson" => {
                if let Some(obs) = &d.obs {
                    let counts: Vec<u64> = obs.iter().map(|&x| x as u64).collect();
                    DataSet::from_poisson_obs(&counts)
                } else {
                    DataSet::new(SuffStats::Poisson {
                        n: d.n.ok_or_else(|| missing("n"))?,
                        total: d.total.ok_or_else(|| missing("total"))?,
                    })
                }
            }
            other => Err(FbstError::InvalidSpec(format!("unknown family '{other}'"))),
        }
    }

    pub fn reference_density(
        &self,
        family: &crate::model::Family,
    ) -> Result<ReferenceDensity> {
        match self.reference {
            ReferenceSpec::Uniform => Ok(ReferenceDensity::uniform()),
            ReferenceSpec::Jeffreys => ReferenceDensity::jeffreys(family),
        }
    }

    pub fn reference_kind(&self) -> ReferenceKind {
        match self.reference {
            ReferenceSpec::Uniform => ReferenceKind::Uniform,
            ReferenceSpec::Jeffreys => ReferenceKind::Jeffreys,
        }
    }

    pub fn hypothesis(&self, space: &crate::space::ParameterSpace) -> Result<Hypothesis> {
        match &self.hypothesis {
            HypothesisSpec::Point { value } => Hypothesis::point(space, value.clone()),
            HypothesisSpec::FixCoordinates { fixed } => {
                Hypothesis::fix_coordinates(space, fixed.clone())
            }
            HypothesisSpec::Named { name } => match name.as_str() {
                "hardy_weinberg" => Hypothesis::hardy_weinberg(space),
                "equal_means" => Hypothesis::equal_coordinates(space),
                other => Err(FbstError::InvalidSpec(format!(
                    "unknown hypothesis '{other}'"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{
        "model": {
            "family": "beta_bernoulli",
            "prior": {"a": 1.0, "b": 1.0},
            "data": {"successes": 3, "trials": 4}
        },
        "hypothesis": {"type": "point", "value": [0.5]}
    }"#;

    #[test]
    fn minimal_spec_parses_with_defaults() {
        let s = TestSpec::from_json(SPEC).unwrap();
        assert_eq!(s.sampling.n, 100_000);
        assert_eq!(s.decision.c1, 0.05);
        assert_eq!(s.reference, ReferenceSpec::Uniform);
        assert_eq!(s.prior().unwrap(), Conjugate::Beta { a: 1.0, b: 1.0 });
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = SPEC.replace("\"model\"", "\"bogus_key\": 1, \"model\"");
        assert!(TestSpec::from_json(&bad).is_err());
    }

    #[test]
    fn missing_prior_field_rejected() {
        let bad = SPEC.replace("\"a\": 1.0, ", "");
        let s = TestSpec::from_json(&bad).unwrap();
        assert!(s.prior().is_err());
    }

    #[test]
    fn raw_observations_reduce_to_stats() {
        let s = TestSpec::from_json(
            r#"{
            "model": {
                "family": "beta_bernoulli",
                "prior": {"a": 1.0, "b": 1.0},
                "data": {"obs": [1, 1, 0, 1]}
            },
            "hypothesis": {"type": "point", "value": [0.5]}
        }"#,
        )
        .unwrap();
        let d = s.dataset().unwrap();
        assert_eq!(d.stats(), &SuffStats::Bernoulli { successes: 3, trials: 4 });
    }

    #[test]
    fn spec_round_trips_through_serde() {
        let s = TestSpec::from_json(SPEC).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        let s2 = TestSpec::from_json(&j).unwrap();
        assert_eq!(s, s2);
    }
}
