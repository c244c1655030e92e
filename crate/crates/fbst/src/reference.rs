//! Reference densities, the surprise function s = posterior / reference,
//! and the reparameterization library used by the invariance harness.

use std::sync::Arc;

use crate::error::{FbstError, Result};
use crate::model::{Family, PosteriorModel};
use crate::space::{Bound, ParameterSpace};

type LogDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Uniform,
    Jeffreys,
    Custom,
}

/// An unnormalized, possibly improper reference density. Consumers must be
/// invariant to additive log constants.
#[derive(Clone)]
pub struct ReferenceDensity {
    kind: ReferenceKind,
    log_density: LogDensityFn,
}

impl ReferenceDensity {
    pub fn uniform() -> Self {
        ReferenceDensity {
            kind: ReferenceKind::Uniform,
            log_density: Arc::new(|_| 0.0),
        }
    }

    /// Jeffreys reference, 0.5 * log det G(theta) for the built-in family.
    /// Not derivable automatically for custom models.
    pub fn jeffreys(family: &Family) -> Result<Self> {
        let family = family.clone();
        let f: LogDensityFn = match family {
            Family::Bernoulli => {
                Arc::new(|t: &[f64]| -0.5 * (t[0].ln() + (1.0 - t[0]).ln()))
            }
            Family::Multinomial { .. } => {
                Arc::new(|p: &[f64]| -0.5 * p.iter().map(|x| x.ln()).sum::<f64>())
            }
            Family::NormalKnownVar { .. } => Arc::new(|_| 0.0),
            Family::NormalMeanVar => Arc::new(|t: &[f64]| -1.5 * t[1].ln()),
            Family::Poisson => Arc::new(|t: &[f64]| -0.5 * t[0].ln()),
        };
        Ok(ReferenceDensity { kind: ReferenceKind::Jeffreys, log_density: f })
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ReferenceDensity {
            kind: ReferenceKind::Custom,
            log_density: Arc::new(f),
        }
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        (self.log_density)(theta)
    }
}

/// The posterior surprise function s(theta) = p_n(theta) / r(theta),
/// evaluated in log space.
#[derive(Clone)]
pub struct SurpriseFunction {
    posterior: PosteriorModel,
    reference: ReferenceDensity,
}

impl SurpriseFunction {
    pub fn new(posterior: PosteriorModel, reference: ReferenceDensity) -> Self {
        SurpriseFunction { posterior, reference }
    }

    pub fn posterior(&self) -> &PosteriorModel {
        &self.posterior
    }

    pub fn reference(&self) -> &ReferenceDensity {
        &self.reference
    }

    pub fn space(&self) -> &ParameterSpace {
        self.posterior.space()
    }

    /// log s(theta) = log p_n(theta) - log r(theta); -inf off support.
    pub fn log_surprise(&self, theta: &[f64]) -> Result<f64> {
        let lp = self.posterior.log_potential(theta)?;
        if lp == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(lp - self.reference.log_density(theta))
    }
}

type PointMapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type LogJacFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A bijective coordinate change omega = phi(theta) with the log Jacobian
/// determinant of the inverse map (in the effective coordinates).
#[derive(Clone)]
pub struct Reparameterization {
    name: String,
    forward: PointMapFn,
    inverse: PointMapFn,
    /// log |det d theta / d omega| at omega, effective coordinates.
    log_jac_inverse: LogJacFn,
    image: ParameterSpace,
}

impl Reparameterization {
    pub fn new<F, G, J>(
        name: &str,
        image: ParameterSpace,
        forward: F,
        inverse: G,
        log_jac_inverse: J,
    ) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Reparameterization {
            name: name.to_string(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            log_jac_inverse: Arc::new(log_jac_inverse),
            image,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn image_space(&self) -> &ParameterSpace {
        &self.image
    }

    pub fn forward(&self, theta: &[f64]) -> Vec<f64> {
        (self.forward)(theta)
    }

    pub fn inverse(&self, omega: &[f64]) -> Vec<f64> {
        (self.inverse)(omega)
    }

    pub fn log_jac_inverse(&self, omega: &[f64]) -> f64 {
        (self.log_jac_inverse)(omega)
    }

    /// Round-trip check at a point, used to validate user-supplied maps.
    pub fn round_trip_ok(&self, theta: &[f64], tol: f64) -> bool {
        let back = self.inverse(&self.forward(theta));
        back.len() == theta.len()
            && back
                .iter()
                .zip(theta)
                .all(|(a, b)| (a - b).abs() <= tol * (1.0 + b.abs()))
    }

    // ---- built-in library ----

    pub fn identity(space: &ParameterSpace) -> Self {
        Reparameterization::new(
            "identity",
            space.clone(),
            |t| t.to_vec(),
            |w| w.to_vec(),
            |_| 0.0,
        )
    }

    /// omega_i = scale_i * theta_i + shift_i. Applicable to non-simplex
    /// spaces only (an affine image of the simplex is not a simplex).
    pub fn affine(space: &ParameterSpace, scale: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        if space.is_simplex() {
            return Err(FbstError::Unsupported(
                "affine map is not applicable to simplex spaces".into(),
            ));
        }
        let d = space.ambient_dim();
        if scale.len() != d || shift.len() != d || scale.iter().any(|&s| s == 0.0) {
            return Err(FbstError::InvalidData("bad affine coefficients".into()));
        }
        let bounds: Vec<(Bound, Bound)> = space
            .bounds()
            .iter()
            .zip(scale.iter().zip(&shift))
            .map(|((lo, hi), (&a, &b))| {
                let map = |bd: &Bound| match bd {
                    Bound::Open(v) => Bound::Open(a * v + b),
                    Bound::Closed(v) => Bound::Closed(a * v + b),
                    Bound::Infinite => Bound::Infinite,
                };
                if a > 0.0 {
                    (map(lo), map(hi))
                } else {
                    (map(hi), map(lo))
                }
            })
            .collect();
        let labels = space.labels().iter().map(|l| format!("aff_{l}")).collect();
        let image = ParameterSpace::new(labels, bounds, false)?;
        let log_j: f64 = -scale.iter().map(|s| s.abs().ln()).sum::<f64>();
        let (s2, b2) = (scale.clone(), shift.clone());
        Ok(Reparameterization::new(
            "affine",
            image,
            move |t| t.iter().zip(scale.iter().zip(&shift)).map(|(x, (a, b))| a * x + b).collect(),
            move |w| w.iter().zip(s2.iter().zip(&b2)).map(|(x, (a, b))| (x - b) / a).collect(),
            move |_| log_j,
        ))
    }

    /// Componentwise log map for strictly positive coordinates.
    pub fn log_map(space: &ParameterSpace) -> Result<Self> {
        if space.is_simplex() {
            return Err(FbstError::Unsupported(
                "log map is not applicable to simplex spaces".into(),
            ));
        }
        let bounds: Result<Vec<(Bound, Bound)>> = space
            .bounds()
            .iter()
            .map(|(lo, hi)| {
                let a = match lo {
                    Bound::Open(v) | Bound::Closed(v) if *v >= 0.0 => *v,
                    _ => {
                        return Err(FbstError::Unsupported(
                            "log map needs nonnegative lower bounds".into(),
                        ))
                    }
                };
                let new_lo = if a == 0.0 { Bound::Infinite } else { Bound::Open(a.ln()) };
                let new_hi = match hi {
                    Bound::Open(v) | Bound::Closed(v) => Bound::Open(v.ln()),
                    Bound::Infinite => Bound::Infinite,
                };
                Ok((new_lo, new_hi))
            })
            .collect();
        let labels = space.labels().iter().map(|l| format!("log_{l}")).collect();
        let image = ParameterSpace::new(labels, bounds?, false)?;
        Ok(Reparameterization::new(
            "log",
            image,
            |t| t.iter().map(|x| x.ln()).collect(),
            |w| w.iter().map(|x| x.exp()).collect(),
            |w| w.iter().sum(),
        ))
    }

    /// Componentwise log-odds map for coordinates on (0, 1).
    pub fn log_odds(space: &ParameterSpace) -> Result<Self> {
        if space.is_simplex() {
            return Err(FbstError::Unsupported(
                "log-odds map is not applicable to simplex spaces".into(),
            ));
        }
        let unit = space.bounds().iter().all(|(lo, hi)| {
            matches!(lo, Bound::Open(v) if *v == 0.0) && matches!(hi, Bound::Open(v) if *v == 1.0)
        });
        if !unit {
            return Err(FbstError::Unsupported(
                "log-odds map needs all coordinates on (0,1)".into(),
            ));
        }
        let labels = space.labels().iter().map(|l| format!("logit_{l}")).collect();
        let image = ParameterSpace::new(
            labels,
            vec![(Bound::Infinite, Bound::Infinite); space.ambient_dim()],
            false,
        )?;
        Ok(Reparameterization::new(
            "log_odds",
            image,
            |t| t.iter().map(|&x| (x / (1.0 - x)).ln()).collect(),
            |w| w.iter().map(|&x| sigmoid(x)).collect(),
            |w| {
                w.iter()
                    .map(|&x| {
                        let s = sigmoid(x);
                        (s * (1.0 - s)).ln()
                    })
                    .sum()
            },
        ))
    }

    /// Stick-breaking map taking the K-simplex (ambient coordinates) to
    /// R^(K-1) through logit-transformed stick fractions.
    pub fn stick_breaking(space: &ParameterSpace) -> Result<Self> {
        if !space.is_simplex() {
            return Err(FbstError::Unsupported(
                "stick-breaking is only applicable to simplex spaces".into(),
            ));
        }
        let k = space.ambient_dim();
        let image = ParameterSpace::new(
            (0..k - 1).map(|i| format!("stick{}", i + 1)).collect(),
            vec![(Bound::Infinite, Bound::Infinite); k - 1],
            false,
        )?;
        Ok(Reparameterization::new(
            "stick_breaking",
            image,
            move |p| {
                let mut rem = 1.0;
                let mut w = Vec::with_capacity(k - 1);
                for &pi in &p[..k - 1] {
                    let v = (pi / rem).clamp(1e-300, 1.0 - 1e-16);
                    w.push((v / (1.0 - v)).ln());
                    rem -= pi;
                }
                w
            },
            move |w| {
                let mut rem = 1.0;
                let mut p = Vec::with_capacity(k);
                for &wi in w {
                    let v = sigmoid(wi);
                    p.push(v * rem);
                    rem *= 1.0 - v;
                }
                p.push(rem);
                p
            },
            move |w| {
                // dp_i/dv_i = prod_{j<i}(1 - v_j); dv_i/dw_i = v_i(1 - v_i)
                let mut log_j = 0.0;
                let mut log_rem = 0.0;
                for &wi in w {
                    let v = sigmoid(wi);
                    log_j += (v * (1.0 - v)).ln() + log_rem;
                    log_rem += (1.0 - v).ln();
                }
                log_j
            },
        ))
    }

    /// Look up a library map by name for the given source space.
    pub fn by_name(name: &str, space: &ParameterSpace) -> Result<Self> {
        match name {
            "identity" => Ok(Reparameterization::identity(space)),
            "affine" => {
                let d = space.ambient_dim();
                Reparameterization::affine(space, vec![2.0; d], vec![-1.0; d])
            }
            "log" => Reparameterization::log_map(space),
            "log_odds" => Reparameterization::log_odds(space),
            "stick_breaking" => Reparameterization::stick_breaking(space),
            other => Err(FbstError::InvalidSpec(format!(
                "unknown reparameterization '{other}'"
            ))),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Push a surprise function through a reparameterization. The transformed
/// posterior and reference both pick up the same Jacobian factor, so
/// s~(phi(theta)) = s(theta) pointwise.
pub fn pushforward(sf: &SurpriseFunction, map: &Reparameterization) -> SurpriseFunction {
    let post = sf.posterior().clone();
    let reference = sf.reference().clone();
    let (m1, m2) = (map.clone(), map.clone());
    let image = map.image_space().clone();
    let new_post = PosteriorModel::custom(image, move |w| {
        let theta = m1.inverse(w);
        match post.log_potential(&theta) {
            Ok(v) if v > f64::NEG_INFINITY => v + m1.log_jac_inverse(w),
            _ => f64::NEG_INFINITY,
        }
    });
    let new_ref = ReferenceDensity::custom(move |w| {
        let theta = m2.inverse(w);
        reference.log_density(&theta) + m2.log_jac_inverse(w)
    });
    SurpriseFunction::new(new_post, new_ref)
}
