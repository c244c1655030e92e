//! Built-in model families, conjugate posterior updating, Fisher
//! information, and data simulation.
//!
//! Densities are handled in log space throughout. For the conjugate built-in
//! families the log-potential includes the closed-form normalization
//! constant, so reported surprise values are on the normalized scale; custom
//! models are only defined up to an additive log constant and every consumer
//! is required to depend on differences only.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson as PoissonDist};

use crate::error::{FbstError, Result};
use crate::space::ParameterSpace;
use crate::special::ln_gamma;

/// Likelihood family tag.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Bernoulli,
    Multinomial { k: usize },
    NormalKnownVar { sigma: f64 },
    NormalMeanVar,
    Poisson,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Bernoulli => "bernoulli",
            Family::Multinomial { .. } => "multinomial",
            Family::NormalKnownVar { .. } => "normal_known_var",
            Family::NormalMeanVar => "normal_mean_var",
            Family::Poisson => "poisson",
        }
    }

    pub fn parameter_space(&self) -> ParameterSpace {
        match self {
            Family::Bernoulli => ParameterSpace::unit_interval("theta"),
            Family::Multinomial { k } => ParameterSpace::simplex(*k),
            Family::NormalKnownVar { .. } => ParameterSpace::real_line("mu"),
            Family::NormalMeanVar => ParameterSpace::new(
                vec!["mu".into(), "var".into()],
                vec![
                    (crate::space::Bound::Infinite, crate::space::Bound::Infinite),
                    (crate::space::Bound::Open(0.0), crate::space::Bound::Infinite),
                ],
                false,
            )
            .expect("static space"),
            Family::Poisson => ParameterSpace::positive_half_line("lambda"),
        }
    }
}

/// Sufficient statistics; the canonical representation of observed data.
/// Raw observations are reduced on ingestion via the `from_*` constructors.
#[derive(Debug, Clone, PartialEq)]
pub enum SuffStats {
    Bernoulli { successes: u64, trials: u64 },
    Multinomial { counts: Vec<u64> },
    Normal { n: u64, sum: f64, sum_sq: f64 },
    Poisson { n: u64, total: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    stats: SuffStats,
}

impl DataSet {
    pub fn new(stats: SuffStats) -> Result<Self> {
        match &stats {
            SuffStats::Bernoulli { successes, trials } => {
                if *trials < 1 {
                    return Err(FbstError::InvalidData("trials must be >= 1".into()));
                }
                if successes > trials {
                    return Err(FbstError::InvalidData(format!(
                        "successes {successes} > trials {trials}"
                    )));
                }
            }
            SuffStats::Multinomial { counts } => {
                if counts.len() < 2 {
                    return Err(FbstError::InvalidData("need at least 2 categories".into()));
                }
                if counts.iter().sum::<u64>() < 1 {
                    return Err(FbstError::InvalidData("total count must be >= 1".into()));
                }
            }
            SuffStats::Normal { n, sum, sum_sq } => {
                if *n < 1 {
                    return Err(FbstError::InvalidData("n must be >= 1".into()));
                }
                if !sum.is_finite() || !sum_sq.is_finite() {
                    return Err(FbstError::InvalidData("non-finite normal statistics".into()));
                }
            }
            SuffStats::Poisson { n, .. } => {
                if *n < 1 {
                    return Err(FbstError::InvalidData("n must be >= 1".into()));
                }
            }
        }
        Ok(DataSet { stats })
    }

    pub fn from_bernoulli_obs(obs: &[bool]) -> Result<Self> {
        DataSet::new(SuffStats::Bernoulli {
            successes: obs.iter().filter(|&&b| b).count() as u64,
            trials: obs.len() as u64,
        })
    }

    pub fn from_categorical_obs(obs: &[usize], k: usize) -> Result<Self> {
        let mut counts = vec![0u64; k];
        for &c in obs {
            if c >= k {
                return Err(FbstError::InvalidData(format!("category {c} out of range")));
            }
            counts[c] += 1;
        }
        DataSet::new(SuffStats::Multinomial { counts })
    }

    pub fn from_normal_obs(obs: &[f64]) -> Result<Self> {
        DataSet::new(SuffStats::Normal {
            n: obs.len() as u64,
            sum: obs.iter().sum(),
            sum_sq: obs.iter().map(|x| x * x).sum(),
        })
    }

    pub fn from_poisson_obs(obs: &[u64]) -> Result<Self> {
        DataSet::new(SuffStats::Poisson {
            n: obs.len() as u64,
            total: obs.iter().sum(),
        })
    }

    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    pub fn family_name(&self) -> &'static str {
        match self.stats {
            SuffStats::Bernoulli { .. } => "bernoulli",
            SuffStats::Multinomial { .. } => "multinomial",
            SuffStats::Normal { .. } => "normal",
            SuffStats::Poisson { .. } => "poisson",
        }
    }
}

/// Conjugate hyperparameters; used both as priors and posteriors.
#[derive(Debug, Clone, PartialEq)]
pub enum Conjugate {
    Beta { a: f64, b: f64 },
    Dirichlet { alpha: Vec<f64> },
    /// Normal prior on the mean of a normal likelihood with known sigma.
    NormalKnownVar { mean: f64, sd: f64, sigma: f64 },
    /// Normal-inverse-gamma prior on (mu, var).
    NormalInvGamma { mu0: f64, kappa0: f64, a0: f64, b0: f64 },
    /// Gamma(shape, rate) prior on a Poisson rate.
    GammaRate { a: f64, b: f64 },
}

impl Conjugate {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Conjugate::Beta { a, b } => *a > 0.0 && *b > 0.0,
            Conjugate::Dirichlet { alpha } => {
                alpha.len() >= 2 && alpha.iter().all(|&x| x > 0.0)
            }
            Conjugate::NormalKnownVar { sd, sigma, .. } => *sd > 0.0 && *sigma > 0.0,
            Conjugate::NormalInvGamma { kappa0, a0, b0, .. } => {
                *kappa0 > 0.0 && *a0 > 0.0 && *b0 > 0.0
            }
            Conjugate::GammaRate { a, b } => *a > 0.0 && *b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(FbstError::InvalidHyperparameters(format!("{self:?}")))
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Conjugate::Beta { .. } => Family::Bernoulli,
            Conjugate::Dirichlet { alpha } => Family::Multinomial { k: alpha.len() },
            Conjugate::NormalKnownVar { sigma, .. } => Family::NormalKnownVar { sigma: *sigma },
            Conjugate::NormalInvGamma { .. } => Family::NormalMeanVar,
            Conjugate::GammaRate { .. } => Family::Poisson,
        }
    }

    /// Normalized log density at an in-support point.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        match self {
            Conjugate::Beta { a, b } => {
                let t = theta[0];
                (a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - ln_beta(*a, *b)
            }
            Conjugate::Dirichlet { alpha } => {
                let mut lp = ln_gamma(alpha.iter().sum());
                for (&ai, &pi) in alpha.iter().zip(theta) {
                    lp += (ai - 1.0) * pi.ln() - ln_gamma(ai);
                }
                lp
            }
            Conjugate::NormalKnownVar { mean, sd, .. } => {
                let z = (theta[0] - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Conjugate::NormalInvGamma { mu0, kappa0, a0, b0 } => {
                let (mu, v) = (theta[0], theta[1]);
                // inverse-gamma on v
                let lp_v = a0 * b0.ln() - ln_gamma(*a0) - (a0 + 1.0) * v.ln() - b0 / v;
                // normal on mu given v
                let s2 = v / kappa0;
                let z = (mu - mu0) * (mu - mu0) / s2;
                let lp_mu = -0.5 * z - 0.5 * s2.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
                lp_v + lp_mu
            }
            Conjugate::GammaRate { a, b } => {
                let l = theta[0];
                a * b.ln() - ln_gamma(*a) + (a - 1.0) * l.ln() - b * l
            }
        }
    }

    /// Closed-form mode when it lies in the interior of the support.
    pub fn mode(&self) -> Option<Vec<f64>> {
        match self {
            Conjugate::Beta { a, b } => {
                if *a > 1.0 && *b > 1.0 {
                    Some(vec![(a - 1.0) / (a + b - 2.0)])
                } else {
                    None
                }
            }
            Conjugate::Dirichlet { alpha } => {
                if alpha.iter().all(|&x| x > 1.0) {
                    let s: f64 = alpha.iter().sum();
                    let k = alpha.len() as f64;
                    Some(alpha.iter().map(|&x| (x - 1.0) / (s - k)).collect())
                } else {
                    None
                }
            }
            Conjugate::NormalKnownVar { mean, .. } => Some(vec![*mean]),
            Conjugate::NormalInvGamma { mu0, a0, b0, .. } => {
                Some(vec![*mu0, b0 / (a0 + 1.5)])
            }
            Conjugate::GammaRate { a, b } => {
                if *a > 1.0 {
                    Some(vec![(a - 1.0) / b])
                } else {
                    None
                }
            }
        }
    }

    /// Closed-form mean (ambient coordinates), used by sampler moment checks.
    pub fn mean(&self) -> Option<Vec<f64>> {
        match self {
            Conjugate::Beta { a, b } => Some(vec![a / (a + b)]),
            Conjugate::Dirichlet { alpha } => {
                let s: f64 = alpha.iter().sum();
                Some(alpha.iter().map(|&x| x / s).collect())
            }
            Conjugate::NormalKnownVar { mean, .. } => Some(vec![*mean]),
            Conjugate::NormalInvGamma { mu0, a0, b0, .. } => {
                if *a0 > 1.0 {
                    Some(vec![*mu0, b0 / (a0 - 1.0)])
                } else {
                    None
                }
            }
            Conjugate::GammaRate { a, b } => Some(vec![a / b]),
        }
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

type LogPotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum PosteriorKind {
    Conjugate(Conjugate),
    Custom(LogPotentialFn),
}

/// An evaluatable (unnormalized) log posterior over a parameter space, with
/// optional conjugate closed form and direct sampler.
#[derive(Clone)]
pub struct PosteriorModel {
    space: ParameterSpace,
    kind: PosteriorKind,
}

impl std::fmt::Debug for PosteriorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            PosteriorKind::Conjugate(c) => write!(f, "PosteriorModel({c:?})"),
            PosteriorKind::Custom(_) => write!(f, "PosteriorModel(custom)"),
        }
    }
}

impl PosteriorModel {
    pub fn from_conjugate(c: Conjugate) -> Result<Self> {
        c.validate()?;
        Ok(PosteriorModel {
            space: c.family().parameter_space(),
            kind: PosteriorKind::Conjugate(c),
        })
    }

    /// Custom model from a user log-potential. The caller is responsible for
    /// the regularity conditions the asymptotic results assume; they cannot
    /// be checked here.
    pub fn custom<F>(space: ParameterSpace, log_potential: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        PosteriorModel {
            space,
            kind: PosteriorKind::Custom(Arc::new(log_potential)),
        }
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn conjugate(&self) -> Option<&Conjugate> {
        match &self.kind {
            PosteriorKind::Conjugate(c) => Some(c),
            PosteriorKind::Custom(_) => None,
        }
    }

    pub fn family(&self) -> Option<Family> {
        self.conjugate().map(|c| c.family())
    }

    pub fn has_direct_sampler(&self) -> bool {
        self.conjugate().is_some()
    }

    /// Log-potential at theta: finite on the interior of the support,
    /// -inf outside it.
    pub fn log_potential(&self, theta: &[f64]) -> Result<f64> {
        self.space.check_dim(theta)?;
        if !self.space.contains(theta) {
            return Ok(f64::NEG_INFINITY);
        }
        let v = match &self.kind {
            PosteriorKind::Conjugate(c) => c.log_density(theta),
            PosteriorKind::Custom(f) => f(theta),
        };
        Ok(if v.is_nan() { f64::NEG_INFINITY } else { v })
    }
}

/// Bayes update of a conjugate prior with observed sufficient statistics.
/// Updating with batches sequentially equals updating with pooled statistics.
pub fn conjugate_posterior_update(prior: &Conjugate, data: &DataSet) -> Result<PosteriorModel> {
    prior.validate()?;
    let mismatch = || FbstError::FamilyMismatch {
        prior: prior.family().name().to_string(),
        data: data.family_name().to_string(),
    };
    let posterior = match (prior, data.stats()) {
        (Conjugate::Beta { a, b }, SuffStats::Bernoulli { successes, trials }) => {
            Conjugate::Beta {
                a: a + *successes as f64,
                b: b + (*trials - *successes) as f64,
            }
        }
        (Conjugate::Dirichlet { alpha }, SuffStats::Multinomial { counts }) => {
            if alpha.len() != counts.len() {
                return Err(FbstError::InvalidData(format!(
                    "Dirichlet has {} categories, counts have {}",
                    alpha.len(),
                    counts.len()
                )));
            }
            Conjugate::Dirichlet {
                alpha: alpha
                    .iter()
                    .zip(counts)
                    .map(|(&a, &c)| a + c as f64)
                    .collect(),
            }
        }
        (
            Conjugate::NormalKnownVar { mean, sd, sigma },
            SuffStats::Normal { n, sum, .. },
        ) => {
            let prior_prec = 1.0 / (sd * sd);
            let data_prec = *n as f64 / (sigma * sigma);
            let post_prec = prior_prec + data_prec;
            Conjugate::NormalKnownVar {
                mean: (mean * prior_prec + sum / (sigma * sigma)) / post_prec,
                sd: post_prec.sqrt().recip(),
                sigma: *sigma,
            }
        }
        (
            Conjugate::NormalInvGamma { mu0, kappa0, a0, b0 },
            SuffStats::Normal { n, sum, sum_sq },
        ) => {
            let nf = *n as f64;
            let xbar = sum / nf;
            let kappa_n = kappa0 + nf;
            let ss = sum_sq - nf * xbar * xbar;
            Conjugate::NormalInvGamma {
                mu0: (kappa0 * mu0 + sum) / kappa_n,
                kappa0: kappa_n,
                a0: a0 + nf / 2.0,
                b0: b0 + 0.5 * ss + kappa0 * nf * (xbar - mu0) * (xbar - mu0) / (2.0 * kappa_n),
            }
        }
        (Conjugate::GammaRate { a, b }, SuffStats::Poisson { n, total }) => Conjugate::GammaRate {
            a: a + *total as f64,
            b: b + *n as f64,
        },
        _ => return Err(mismatch()),
    };
    PosteriorModel::from_conjugate(posterior)
}

/// Per-observation Fisher information matrix, in the effective coordinates
/// (t x t; the simplex uses the first K-1 probabilities as free coordinates).
pub fn fisher_information(family: &Family, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let space = family.parameter_space();
    space.check_dim(theta)?;
    if !space.strictly_interior(theta, 1e-12) {
        return Err(FbstError::OutsideSupport(format!(
            "fisher_information needs an interior point, got {theta:?}"
        )));
    }
    let g = match family {
        Family::Bernoulli => {
            let t = theta[0];
            vec![vec![1.0 / (t * (1.0 - t))]]
        }
        Family::Multinomial { k } => {
            let t = k - 1;
            let pk = theta[k - 1];
            let mut g = vec![vec![0.0; t]; t];
            for i in 0..t {
                for j in 0..t {
                    g[i][j] = if i == j { 1.0 / theta[i] } else { 0.0 } + 1.0 / pk;
                }
            }
            g
        }
        Family::NormalKnownVar { sigma } => vec![vec![1.0 / (sigma * sigma)]],
        Family::NormalMeanVar => {
            let v = theta[1];
            vec![vec![1.0 / v, 0.0], vec![0.0, 1.0 / (2.0 * v * v)]]
        }
        Family::Poisson => vec![vec![1.0 / theta[0]]],
    };
    Ok(g)
}

/// log det of a symmetric positive-definite matrix via Cholesky.
/// Errors if the matrix is not positive-definite.
pub fn log_det_spd(g: &[Vec<f64>]) -> Result<f64> {
    let n = g.len();
    let mut l = vec![vec![0.0f64; n]; n];
    let mut log_det = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(FbstError::InvalidData(
                        "matrix is not positive-definite".into(),
                    ));
                }
                l[i][j] = s.sqrt();
                log_det += 2.0 * l[i][j].ln();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(log_det)
}

/// Simulate a dataset of size n from the sampling distribution at theta0.
/// Identical seeds produce identical datasets.
pub fn simulate_data(family: &Family, theta0: &[f64], n: u64, seed: u64) -> Result<DataSet> {
    let space = family.parameter_space();
    space.check_dim(theta0)?;
    // closed boundary values like theta = 0 or 1 are legitimate simulation
    // truths even though they are off the open posterior support
    let boundary_ok = matches!(family, Family::Bernoulli | Family::Multinomial { .. });
    if !space.contains(theta0) && !(boundary_ok && degenerate_prob_ok(theta0)) {
        return Err(FbstError::OutsideSupport(format!("theta0 = {theta0:?}")));
    }
    if n < 1 {
        return Err(FbstError::InvalidData("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = match family {
        Family::Bernoulli => {
            let p = theta0[0];
            let mut s = 0u64;
            for _ in 0..n {
                if rng.gen::<f64>() < p {
                    s += 1;
                }
            }
            SuffStats::Bernoulli { successes: s, trials: n }
        }
        Family::Multinomial { k } => {
            let mut counts = vec![0u64; *k];
            for _ in 0..n {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut cat = k - 1;
                for (i, &p) in theta0.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        cat = i;
                        break;
                    }
                }
                counts[cat] += 1;
            }
            SuffStats::Multinomial { counts }
        }
        Family::NormalKnownVar { sigma } => {
            let dist = Normal::new(theta0[0], *sigma)
                .map_err(|e| FbstError::InvalidData(e.to_string()))?;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let x = dist.sample(&mut rng);
                sum += x;
                sum_sq += x * x;
            }
            SuffStats::Normal { n, sum, sum_sq }
        }
        Family::NormalMeanVar => {
            let dist = Normal::new(theta0[0], theta0[1].sqrt())
                .map_err(|e| FbstError::InvalidData(e.to_string()))?;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let x = dist.sample(&mut rng);
                sum += x;
                sum_sq += x * x;
            }
            SuffStats::Normal { n, sum, sum_sq }
        }
        Family::Poisson => {
            let dist = PoissonDist::new(theta0[0])
                .map_err(|e| FbstError::InvalidData(e.to_string()))?;
            let mut total = 0u64;
            for _ in 0..n {
                total += dist.sample(&mut rng) as u64;
            }
            SuffStats::Poisson { n, total }
        }
    };
    DataSet::new(stats)
}

fn degenerate_prob_ok(theta0: &[f64]) -> bool {
    theta0.iter().all(|&p| (0.0..=1.0).contains(&p))
        && (theta0.iter().sum::<f64>() - 1.0).abs() < 1e-9
            // single probability
            || (theta0.len() == 1 && (0.0..=1.0).contains(&theta0[0]))
}
