//! End-to-end orchestration: run a full FBST from a test spec, plus the
//! calibration, consistency, and invariance study harnesses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{
    decide, empirical_quantile_ceil, standardized_evalue, CalibrationRow, CalibrationTable,
    DecisionThresholds,
};
use crate::error::{FbstError, Result};
use crate::hypothesis::Hypothesis;
use crate::integrate::{
    estimate_evalue, sample_posterior_direct, sample_posterior_mcmc, truth_function,
    EvalEstimate, EvalMethod, McmcTuning, TruthFunction,
};
use crate::model::{conjugate_posterior_update, simulate_data};
use crate::optimize::{clamp_to_global, sup_surprise_global, sup_surprise_hypothesis, Budget};
use crate::quadrature::quadrature_evalue;
use crate::reference::{pushforward, Reparameterization, SurpriseFunction};
use crate::asymptotics::qq_confidence;
use crate::spec::{MethodSpec, TestSpec};
use crate::special::ks_uniform_statistic;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SamplerInfo {
    pub generator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thinning: Option<usize>,
    pub warning: bool,
}

/// The hashable section of a report: everything that must be reproducible
/// bit-for-bit given the same spec and seed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportResult {
    pub version: String,
    pub family: String,
    pub reference: String,
    pub hypothesis: String,
    pub method: String,
    pub n: usize,
    pub seed: u64,
    pub t: u32,
    pub m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<u32>,
    pub theta_hat: Vec<f64>,
    pub s_hat: f64,
    pub theta_star: Vec<f64>,
    pub s_star: f64,
    pub ev: f64,
    pub ev_bar: f64,
    pub se: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<String>,
    pub thresholds: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_curve_csv: Option<String>,
}

/// Timing and integrity metadata, excluded from the hashable section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMeta {
    pub wall_clock_ms: f64,
    pub result_sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub result: ReportResult,
    pub meta: ReportMeta,
}

impl EvalReport {
    fn seal(result: ReportResult, wall_clock_ms: f64) -> Self {
        let canonical = serde_json::to_string(&result).expect("report serializes");
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        EvalReport {
            result,
            meta: ReportMeta { wall_clock_ms, result_sha256: hash },
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct TestRunOutput {
    pub report: EvalReport,
    /// W(v) curve at quantile knots, present for the sampling routes.
    pub w_curve: Option<Vec<(f64, f64)>>,
}

struct CoreOutcome {
    global: crate::hypothesis::OptimumReport,
    constrained: crate::hypothesis::OptimumReport,
    estimate: EvalEstimate,
    ess: Option<f64>,
    sampler: Option<SamplerInfo>,
    truth: Option<TruthFunction>,
}

fn mcmc_tuning(spec: &TestSpec) -> McmcTuning {
    McmcTuning {
        initial_step: spec.sampling.tuning.initial_step,
        burn_in: spec.sampling.tuning.burn_in,
        thinning: spec.sampling.tuning.thinning,
    }
}

fn run_core(
    sf: &SurpriseFunction,
    hypothesis: &Hypothesis,
    method: MethodSpec,
    n: usize,
    seed: u64,
    tuning: &McmcTuning,
    budget: &Budget,
) -> Result<CoreOutcome> {
    let global = sup_surprise_global(sf, budget)?;
    let mut constrained = sup_surprise_hypothesis(sf, hypothesis, budget)?;
    clamp_to_global(&mut constrained, &global);
    let log_s_star = constrained.log_sup;

    let (estimate, ess, sampler, truth) = match method {
        MethodSpec::Quadrature => {
            let est = quadrature_evalue(sf, log_s_star)?;
            (est, None, None, None)
        }
        MethodSpec::Direct => {
            let sample = sample_posterior_direct(sf.posterior(), n, seed)?;
            let w = truth_function(&sample, sf)?;
            let est = estimate_evalue(&w, log_s_star, sample.ess);
            let info = SamplerInfo {
                generator: "direct".into(),
                acceptance_rate: None,
                burn_in: None,
                thinning: None,
                warning: false,
            };
            (est, Some(sample.ess), Some(info), Some(w))
        }
        MethodSpec::Mcmc => {
            let sample = sample_posterior_mcmc(sf.posterior(), n, seed, tuning)?;
            let w = truth_function(&sample, sf)?;
            let est = estimate_evalue(&w, log_s_star, sample.ess);
            let d = sample.diagnostics.as_ref().expect("mcmc diagnostics");
            let info = SamplerInfo {
                generator: "mcmc".into(),
                acceptance_rate: Some(d.acceptance_rate),
                burn_in: Some(d.burn_in),
                thinning: Some(d.thinning),
                warning: d.acceptance_warning,
            };
            (est, Some(sample.ess), Some(info), Some(w))
        }
    };
    Ok(CoreOutcome { global, constrained, estimate, ess, sampler, truth })
}

fn build_result(
    spec_family: &str,
    reference: &str,
    hypothesis: &Hypothesis,
    method: MethodSpec,
    n: usize,
    seed: u64,
    t: u32,
    outcome: &CoreOutcome,
    thresholds: DecisionThresholds,
    w_curve_csv: Option<String>,
) -> Result<ReportResult> {
    let m = hypothesis.m() as u32;
    let (h, sev, decision) = if hypothesis.is_sharp() {
        let h = t - m;
        let sev = standardized_evalue(t, h, outcome.estimate.ev_bar)?;
        let d = decide(sev, thresholds);
        (Some(h), Some(sev), Some(d.verdict.as_str().to_string()))
    } else {
        // no equality constraints: report raw ev only, refuse to standardize
        (None, None, None)
    };
    let method_name = match (method, outcome.estimate.method) {
        (MethodSpec::Quadrature, _) | (_, EvalMethod::Quadrature) => "quadrature",
        (MethodSpec::Direct, _) => "direct",
        (MethodSpec::Mcmc, _) => "mcmc",
    };
    Ok(ReportResult {
        version: env!("CARGO_PKG_VERSION").to_string(),
        family: spec_family.to_string(),
        reference: reference.to_string(),
        hypothesis: hypothesis.name().to_string(),
        method: method_name.to_string(),
        n,
        seed,
        t,
        m,
        h,
        theta_hat: outcome.global.maximizer.clone(),
        s_hat: outcome.global.log_sup.exp(),
        theta_star: outcome.constrained.maximizer.clone(),
        s_star: outcome.constrained.log_sup.exp(),
        ev: outcome.estimate.ev,
        ev_bar: outcome.estimate.ev_bar,
        se: outcome.estimate.se,
        ess: outcome.ess,
        sev,
        decision,
        thresholds: (thresholds.c1, thresholds.c2),
        sampler: outcome.sampler.clone(),
        w_curve_csv,
    })
}

fn reference_name(spec: &TestSpec) -> &'static str {
    match spec.reference_kind() {
        crate::reference::ReferenceKind::Uniform => "uniform",
        crate::reference::ReferenceKind::Jeffreys => "jeffreys",
        crate::reference::ReferenceKind::Custom => "custom",
    }
}

/// Run the full FBST pipeline for a test spec.
pub fn run_test(spec: &TestSpec) -> Result<TestRunOutput> {
    let start = std::time::Instant::now();
    let prior = spec.prior()?;
    let data = spec.dataset()?;
    let posterior = conjugate_posterior_update(&prior, &data)?;
    let family = posterior.family().expect("conjugate family");
    let reference = spec.reference_density(&family)?;
    let sf = SurpriseFunction::new(posterior, reference);
    let hypothesis = spec.hypothesis(sf.space())?;
    let t = sf.space().effective_dim() as u32;
    let thresholds = DecisionThresholds::new(spec.decision.c1, spec.decision.c2)?;
    let tuning = mcmc_tuning(spec);
    let outcome = run_core(
        &sf,
        &hypothesis,
        spec.sampling.method,
        spec.sampling.n,
        spec.sampling.seed,
        &tuning,
        &Budget::default(),
    )?;
    let w_curve = outcome.truth.as_ref().map(|w| w.curve(512));
    let result = build_result(
        &spec.model.family,
        reference_name(spec),
        &hypothesis,
        spec.sampling.method,
        spec.sampling.n,
        spec.sampling.seed,
        t,
        &outcome,
        thresholds,
        spec.output.w_curve_csv.clone(),
    )?;
    let report = EvalReport::seal(result, start.elapsed().as_secs_f64() * 1e3);
    Ok(TestRunOutput { report, w_curve })
}

/// Derive a replicate seed from (base seed, stratum, index) via splitmix64.
pub fn derive_seed(seed: u64, stratum: u64, index: u64) -> u64 {
    let mut x = seed
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(stratum.wrapping_add(1)))
        .wrapping_add(0xbf58476d1ce4e5b9u64.wrapping_mul(index.wrapping_add(1)));
    for _ in 0..2 {
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^= x >> 31;
    }
    x
}

/// ev_bar for one simulated replicate under theta0.
fn evb_replicate(
    spec: &TestSpec,
    theta0: &[f64],
    n: u64,
    replicate_seed: u64,
) -> Result<f64> {
    let prior = spec.prior()?;
    let family = prior.family();
    let data = simulate_data(&family, theta0, n, replicate_seed)?;
    let posterior = conjugate_posterior_update(&prior, &data)?;
    let reference = spec.reference_density(&family)?;
    let sf = SurpriseFunction::new(posterior, reference);
    let hypothesis = spec.hypothesis(sf.space())?;
    // replicate studies are conjugate-seeded, so a small budget suffices
    let budget = Budget { restarts: 4, max_evals: 4000 };
    let tuning = mcmc_tuning(spec);
    let outcome = run_core(
        &sf,
        &hypothesis,
        spec.sampling.method,
        spec.sampling.n,
        replicate_seed,
        &tuning,
        &budget,
    )?;
    Ok(outcome.estimate.ev_bar)
}

fn replicate_evbs(
    spec: &TestSpec,
    theta0: &[f64],
    n: u64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| evb_replicate(spec, theta0, n, derive_seed(seed, n, r as u64)))
        .collect()
}

/// Empirical critical levels c(n): the (1 - alpha) quantile of ev_bar over
/// replicates simulated under a feasible theta0.
pub fn run_calibration(
    spec: &TestSpec,
    grid: &[u64],
    theta0: &[f64],
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<CalibrationTable> {
    if replicates < 200 {
        return Err(FbstError::InvalidSpec(format!(
            "calibration needs at least 200 replicates, got {replicates}"
        )));
    }
    if grid.is_empty() {
        return Err(FbstError::InvalidSpec("empty calibration grid".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(FbstError::InvalidSpec(format!("alpha = {alpha} outside [0,1)")));
    }
    let prior = spec.prior()?;
    let space = prior.family().parameter_space();
    let hypothesis = spec.hypothesis(&space)?;
    if hypothesis.residual(theta0) > crate::hypothesis::CONSTRAINT_TOL {
        return Err(FbstError::InfeasibleHypothesis(format!(
            "theta0 = {theta0:?} does not satisfy the hypothesis constraints"
        )));
    }
    let mut table = CalibrationTable::default();
    for &n in grid {
        let evbs = replicate_evbs(spec, theta0, n, replicates, seed)?;
        table.rows.push(CalibrationRow {
            n,
            critical_level: empirical_quantile_ceil(&evbs, 1.0 - alpha),
            replicates,
            seed,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConsistencyRow {
    pub n: u64,
    pub median_ev_bar: f64,
    pub ks_statistic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
pub struct ConsistencyStudy {
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,median_ev_bar,ks_statistic\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.n, r.median_ev_bar, r.ks_statistic));
        }
        out
    }
}

/// Simulation study over a grid of sample sizes. Under a true hypothesis the
/// KS column measures how far QQ(t, h, ev_bar) is from uniform; under a
/// false one the median column shows ev_bar drifting to 1.
pub fn run_consistency_study(
    spec: &TestSpec,
    grid: &[u64],
    theta0: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<ConsistencyStudy> {
    if replicates == 0 {
        return Err(FbstError::InvalidSpec("replicates must be >= 1".into()));
    }
    if grid.is_empty() {
        return Err(FbstError::InvalidSpec("empty sample-size grid".into()));
    }
    let prior = spec.prior()?;
    let space = prior.family().parameter_space();
    let hypothesis = spec.hypothesis(&space)?;
    if !hypothesis.is_sharp() {
        return Err(FbstError::InvalidSpec(
            "consistency study needs a sharp hypothesis".into(),
        ));
    }
    let t = space.effective_dim() as u32;
    let h = t - hypothesis.m() as u32;
    let mut study = ConsistencyStudy::default();
    for &n in grid {
        let evbs = replicate_evbs(spec, theta0, n, replicates, seed)?;
        let mut sorted = evbs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let transformed: Vec<f64> = evbs
            .iter()
            .map(|&e| qq_confidence(t, h, e))
            .collect::<Result<_>>()?;
        study.rows.push(ConsistencyRow {
            n,
            median_ev_bar: median,
            ks_statistic: ks_uniform_statistic(&transformed),
        });
    }
    Ok(study)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub map: String,
    pub base: EvalReport,
    pub transformed: EvalReport,
    pub delta_ev: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Recompute the e-value after pushing the model and hypothesis through a
/// named library reparameterization, and compare.
pub fn run_invariance_check(spec: &TestSpec, map_name: &str) -> Result<InvarianceReport> {
    let start = std::time::Instant::now();
    let base_out = run_test(spec)?;

    let prior = spec.prior()?;
    let data = spec.dataset()?;
    let posterior = conjugate_posterior_update(&prior, &data)?;
    let family = posterior.family().expect("conjugate family");
    let reference = spec.reference_density(&family)?;
    let sf = SurpriseFunction::new(posterior.clone(), reference);
    let map = Reparameterization::by_name(map_name, sf.space())?;
    let hypothesis = spec.hypothesis(sf.space())?;
    let pushed_sf = pushforward(&sf, &map);
    let pushed_h = hypothesis.pushforward(&map);
    let t = pushed_sf.space().effective_dim() as u32;
    let thresholds = DecisionThresholds::new(spec.decision.c1, spec.decision.c2)?;
    let tuning = mcmc_tuning(spec);

    let outcome = match spec.sampling.method {
        MethodSpec::Direct => {
            // draw in the original coordinates with the same seed and push
            // the sample through the map: this is exact sampling of the
            // transformed posterior
            let global = sup_surprise_global(&pushed_sf, &Budget::default())?;
            let mut constrained =
                sup_surprise_hypothesis(&pushed_sf, &pushed_h, &Budget::default())?;
            clamp_to_global(&mut constrained, &global);
            let mut sample = sample_posterior_direct(&posterior, spec.sampling.n, spec.sampling.seed)?;
            sample.draws = sample.draws.iter().map(|d| map.forward(d)).collect();
            let w = truth_function(&sample, &pushed_sf)?;
            let est = estimate_evalue(&w, constrained.log_sup, sample.ess);
            CoreOutcome {
                global,
                constrained,
                estimate: est,
                ess: Some(sample.ess),
                sampler: Some(SamplerInfo {
                    generator: "direct".into(),
                    acceptance_rate: None,
                    burn_in: None,
                    thinning: None,
                    warning: false,
                }),
                truth: Some(w),
            }
        }
        m => run_core(
            &pushed_sf,
            &pushed_h,
            m,
            spec.sampling.n,
            spec.sampling.seed,
            &tuning,
            &Budget::default(),
        )?,
    };

    let result = build_result(
        &format!("{}@{}", spec.model.family, map.name()),
        reference_name(spec),
        &pushed_h,
        spec.sampling.method,
        spec.sampling.n,
        spec.sampling.seed,
        t,
        &outcome,
        thresholds,
        None,
    )?;
    let transformed = EvalReport::seal(result, start.elapsed().as_secs_f64() * 1e3);

    let delta_ev = (base_out.report.result.ev - transformed.result.ev).abs();
    let tolerance = match spec.sampling.method {
        MethodSpec::Quadrature => 1e-5,
        _ => {
            let se1 = base_out.report.result.se;
            let se2 = transformed.result.se;
            let comb = (se1 * se1 + se2 * se2).sqrt();
            // same-path runs (identity map) have zero combined error; keep a
            // floor so pass/fail stays meaningful
            (3.0 * comb).max(1e-12)
        }
    };
    Ok(InvarianceReport {
        map: map.name().to_string(),
        base: base_out.report,
        transformed,
        delta_ev,
        pass: delta_ev <= tolerance,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_spec(method: &str, seed: u64) -> TestSpec {
        TestSpec::from_json(&format!(
            r#"{{
            "model": {{
                "family": "beta_bernoulli",
                "prior": {{"a": 1.0, "b": 1.0}},
                "data": {{"successes": 3, "trials": 4}}
            }},
            "hypothesis": {{"type": "point", "value": [0.5]}},
            "sampling": {{"n": 100000, "seed": {seed}, "method": "{method}"}}
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn quadrature_run_matches_oracle() {
        let out = run_test(&beta_spec("quadrature", 0)).unwrap();
        let r = &out.report.result;
        assert!((r.ev - 0.242306).abs() < 1e-4, "ev {}", r.ev);
        assert_eq!(r.decision.as_deref(), Some("Neutral"));
        assert!((r.s_star - 1.25).abs() < 1e-9);
        assert!((r.s_hat - 2.109375).abs() < 1e-7);
        assert_eq!(r.t, 1);
        assert_eq!(r.h, Some(0));
    }

    #[test]
    fn mc_run_within_three_se_of_quadrature() {
        let q = run_test(&beta_spec("quadrature", 0)).unwrap();
        let mc = run_test(&beta_spec("direct", 42)).unwrap();
        let d = (q.report.result.ev - mc.report.result.ev).abs();
        assert!(d < 3.0 * mc.report.result.se + 1e-9, "delta {d}");
        assert!(mc.w_curve.is_some());
    }

    #[test]
    fn mode_attainment_gives_ev_one() {
        let spec = TestSpec::from_json(
            r#"{
            "model": {
                "family": "beta_bernoulli",
                "prior": {"a": 1.0, "b": 1.0},
                "data": {"successes": 1, "trials": 2}
            },
            "hypothesis": {"type": "point", "value": [0.5]},
            "sampling": {"method": "quadrature"}
        }"#,
        )
        .unwrap();
        let out = run_test(&spec).unwrap();
        assert_eq!(out.report.result.ev, 1.0);
        assert_eq!(out.report.result.decision.as_deref(), Some("Accept"));
    }

    #[test]
    fn reports_are_deterministic_and_round_trip() {
        let a = run_test(&beta_spec("direct", 7)).unwrap();
        let b = run_test(&beta_spec("direct", 7)).unwrap();
        assert_eq!(
            serde_json::to_string(&a.report.result).unwrap(),
            serde_json::to_string(&b.report.result).unwrap()
        );
        assert_eq!(a.report.meta.result_sha256, b.report.meta.result_sha256);
        let json = a.report.to_json_pretty();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.result, a.report.result);
    }

    #[test]
    fn likelihood_principle_identical_stats_identical_reports() {
        let mk = |obs: &str| {
            TestSpec::from_json(&format!(
                r#"{{
                "model": {{
                    "family": "beta_bernoulli",
                    "prior": {{"a": 1.0, "b": 1.0}},
                    "data": {{"obs": {obs}}}
                }},
                "hypothesis": {{"type": "point", "value": [0.5]}},
                "sampling": {{"n": 20000, "seed": 5, "method": "direct"}}
            }}"#
            ))
            .unwrap()
        };
        let a = run_test(&mk("[1, 1, 0, 1]")).unwrap();
        let b = run_test(&mk("[0, 1, 1, 1]")).unwrap();
        assert_eq!(a.report.meta.result_sha256, b.report.meta.result_sha256);
    }

    #[test]
    fn invariance_identity_is_exact() {
        let r = run_invariance_check(&beta_spec("direct", 3), "identity").unwrap();
        assert_eq!(r.delta_ev, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn invariance_log_odds_quadrature() {
        let r = run_invariance_check(&beta_spec("quadrature", 0), "log_odds").unwrap();
        assert!(r.delta_ev < 1e-5, "delta {}", r.delta_ev);
        assert!(r.pass);
    }

    #[test]
    fn invariance_inapplicable_map_rejected() {
        let spec = TestSpec::from_json(
            r#"{
            "model": {
                "family": "dirichlet_multinomial",
                "prior": {"alpha": [1.0, 1.0, 1.0]},
                "data": {"counts": [5, 2, 3]}
            },
            "hypothesis": {"type": "named", "name": "hardy_weinberg"},
            "sampling": {"method": "quadrature"}
        }"#,
        )
        .unwrap();
        let err = run_invariance_check(&spec, "affine").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn calibration_shape_and_determinism() {
        let spec = beta_spec("quadrature", 0);
        let t1 = run_calibration(&spec, &[50, 200], &[0.5], 200, 0.05, 9).unwrap();
        let t2 = run_calibration(&spec, &[50, 200], &[0.5], 200, 0.05, 9).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(t1.rows.len(), 2);
        for r in &t1.rows {
            assert!((0.0..=1.0).contains(&r.critical_level));
        }
    }

    #[test]
    fn calibration_infeasible_theta0_rejected() {
        let spec = beta_spec("quadrature", 0);
        assert!(matches!(
            run_calibration(&spec, &[50], &[0.7], 200, 0.05, 9),
            Err(FbstError::InfeasibleHypothesis(_))
        ));
    }

    #[test]
    fn consistency_zero_replicates_rejected() {
        let spec = beta_spec("quadrature", 0);
        assert!(run_consistency_study(&spec, &[50], &[0.6], 0, 1).is_err());
    }

    #[test]
    fn consistency_medians_grow_under_false_hypothesis() {
        let spec = beta_spec("quadrature", 0);
        let s = run_consistency_study(&spec, &[50, 400], &[0.6], 60, 17).unwrap();
        assert!(s.rows[1].median_ev_bar >= s.rows[0].median_ev_bar);
    }
}
