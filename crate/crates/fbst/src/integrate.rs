//! The FBST integration step: posterior sampling (direct or adaptive
//! random-walk Metropolis), the cumulative surprise distribution W(v), and
//! the Monte Carlo e-value with its standard error.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma as GammaDist, Normal as NormalDist};

use crate::error::{FbstError, Result};
use crate::model::{Conjugate, PosteriorModel};
use crate::optimize::Chart;
use crate::reference::SurpriseFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorTag {
    Direct,
    Mcmc,
}

#[derive(Debug, Clone)]
pub struct McmcDiagnostics {
    pub acceptance_rate: f64,
    pub burn_in: usize,
    pub thinning: usize,
    pub step_scale: f64,
    /// Set when the post-adaptation acceptance rate left the 0.2..0.5 band.
    pub acceptance_warning: bool,
}

/// A matrix of posterior draws plus provenance and diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub draws: Vec<Vec<f64>>,
    pub generator: GeneratorTag,
    pub seed: u64,
    pub diagnostics: Option<McmcDiagnostics>,
    pub ess: f64,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// MCMC tuning knobs. Defaults: 10% burn-in, no thinning, unit step.
#[derive(Debug, Clone, Copy)]
pub struct McmcTuning {
    pub initial_step: f64,
    pub burn_in: Option<usize>,
    pub thinning: usize,
}

impl Default for McmcTuning {
    fn default() -> Self {
        McmcTuning { initial_step: 1.0, burn_in: None, thinning: 1 }
    }
}

/// i.i.d. draws from a conjugate posterior. Deterministic under seed.
pub fn sample_posterior_direct(
    model: &PosteriorModel,
    n: usize,
    seed: u64,
) -> Result<PosteriorSample> {
    let conj = model.conjugate().ok_or_else(|| {
        FbstError::Unsupported("model has no direct sampler; use MCMC".into())
    })?;
    if n == 0 {
        return Err(FbstError::InvalidData("sample size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(n);
    match conj {
        Conjugate::Beta { a, b } => {
            let d = BetaDist::new(*a, *b).map_err(|e| FbstError::SamplerFailure(e.to_string()))?;
            for _ in 0..n {
                draws.push(vec![clamp_open_unit(d.sample(&mut rng))]);
            }
        }
        Conjugate::Dirichlet { alpha } => {
            let gammas: Vec<GammaDist<f64>> = alpha
                .iter()
                .map(|&a| GammaDist::new(a, 1.0))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| FbstError::SamplerFailure(e.to_string()))?;
            for _ in 0..n {
                let mut x: Vec<f64> = gammas.iter().map(|g| g.sample(&mut rng).max(1e-300)).collect();
                let s: f64 = x.iter().sum();
                for v in &mut x {
                    *v /= s;
                }
                draws.push(x);
            }
        }
        Conjugate::NormalKnownVar { mean, sd, .. } => {
            let d = NormalDist::new(*mean, *sd)
                .map_err(|e| FbstError::SamplerFailure(e.to_string()))?;
            for _ in 0..n {
                draws.push(vec![d.sample(&mut rng)]);
            }
        }
        Conjugate::NormalInvGamma { mu0, kappa0, a0, b0 } => {
            let g = GammaDist::new(*a0, 1.0 / b0)
                .map_err(|e| FbstError::SamplerFailure(e.to_string()))?;
            let std_norm = NormalDist::new(0.0, 1.0).unwrap();
            for _ in 0..n {
                let v = 1.0 / g.sample(&mut rng).max(1e-300);
                let mu = mu0 + (v / kappa0).sqrt() * std_norm.sample(&mut rng);
                draws.push(vec![mu, v]);
            }
        }
        Conjugate::GammaRate { a, b } => {
            let d = GammaDist::new(*a, 1.0 / b)
                .map_err(|e| FbstError::SamplerFailure(e.to_string()))?;
            for _ in 0..n {
                draws.push(vec![d.sample(&mut rng).max(1e-300)]);
            }
        }
    }
    let ess = n as f64;
    Ok(PosteriorSample { draws, generator: GeneratorTag::Direct, seed, diagnostics: None, ess })
}

fn clamp_open_unit(x: f64) -> f64 {
    x.clamp(1e-300, 1.0 - 1e-16)
}

/// Adaptive random-walk Metropolis over an unconstrained chart of the
/// support. The proposal scale adapts toward 30% acceptance during burn-in
/// and is frozen afterwards.
pub fn sample_posterior_mcmc(
    model: &PosteriorModel,
    n: usize,
    seed: u64,
    tuning: &McmcTuning,
) -> Result<PosteriorSample> {
    if n == 0 {
        return Err(FbstError::InvalidData("sample size must be >= 1".into()));
    }
    if tuning.initial_step <= 0.0 {
        return Err(FbstError::InvalidData("step scale must be positive".into()));
    }
    let thin = tuning.thinning.max(1);
    let burn_in = tuning.burn_in.unwrap_or(n / 10).max(100);
    let chart = Chart::new(model.space());
    let dim = chart.dim();
    let target = |z: &[f64]| -> f64 {
        let theta = chart.to_ambient(z);
        match model.log_potential(&theta) {
            Ok(v) if v > f64::NEG_INFINITY => v + chart.log_jacobian(z),
            _ => f64::NEG_INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // starting point: conjugate mode/mean if present, else probe the chart
    let mut z = vec![0.0; dim];
    if let Some(c) = model.conjugate() {
        if let Some(m) = c.mode().or_else(|| c.mean()) {
            if model.space().contains(&m) {
                z = chart.from_ambient(&m);
            }
        }
    }
    let mut lp = target(&z);
    if lp == f64::NEG_INFINITY {
        let mut found = false;
        for _ in 0..1000 {
            for zi in z.iter_mut() {
                *zi = rng.gen_range(-5.0..5.0);
            }
            lp = target(&z);
            if lp > f64::NEG_INFINITY {
                found = true;
                break;
            }
        }
        if !found {
            return Err(FbstError::SamplerFailure(
                "chain never found a finite log-potential".into(),
            ));
        }
    }

    let mut step = tuning.initial_step;
    let normal = NormalDist::new(0.0, 1.0).unwrap();
    let total = burn_in + n * thin;
    let mut draws = Vec::with_capacity(n);
    let mut accepted_post = 0usize;
    let mut proposed_post = 0usize;
    let mut batch_accepts = 0usize;
    const BATCH: usize = 50;

    for it in 0..total {
        let mut zp = z.clone();
        for v in zp.iter_mut() {
            *v += step * normal.sample(&mut rng);
        }
        let lpp = target(&zp);
        let accept = lpp > f64::NEG_INFINITY
            && (lpp - lp >= 0.0 || rng.gen::<f64>().ln() < lpp - lp);
        if accept {
            z = zp;
            lp = lpp;
        }
        if it < burn_in {
            if accept {
                batch_accepts += 1;
            }
            if (it + 1) % BATCH == 0 {
                let rate = batch_accepts as f64 / BATCH as f64;
                step *= ((rate - 0.3) * 1.5).exp();
                step = step.clamp(1e-6, 50.0);
                batch_accepts = 0;
            }
        } else {
            proposed_post += 1;
            if accept {
                accepted_post += 1;
            }
            if (it - burn_in + 1) % thin == 0 {
                draws.push(chart.to_ambient(&z));
            }
        }
    }
    let acceptance_rate = accepted_post as f64 / proposed_post.max(1) as f64;
    let acceptance_warning = !(0.2..=0.5).contains(&acceptance_rate);
    let ess = effective_sample_size(&draws);
    Ok(PosteriorSample {
        draws,
        generator: GeneratorTag::Mcmc,
        seed,
        diagnostics: Some(McmcDiagnostics {
            acceptance_rate,
            burn_in,
            thinning: thin,
            step_scale: step,
            acceptance_warning,
        }),
        ess,
    })
}

/// ESS from the autocorrelation sum of each coordinate, truncated at the
/// first lag pair with a negative sum; the most conservative coordinate wins.
pub fn effective_sample_size(draws: &[Vec<f64>]) -> f64 {
    let n = draws.len();
    if n < 10 {
        return n as f64;
    }
    let dim = draws[0].len();
    let mut min_ess = n as f64;
    for j in 0..dim {
        let series: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        min_ess = min_ess.min(ess_1d(&series));
    }
    min_ess.max(1.0)
}

fn ess_1d(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return n as f64;
    }
    let max_lag = (n / 2).min(2000);
    let rho = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += (x[i] - mean) * (x[i + lag] - mean);
        }
        s / (n as f64 * var)
    };
    let mut acf_sum = 0.0;
    let mut lag = 1;
    while lag + 1 <= max_lag {
        let pair = rho(lag) + rho(lag + 1);
        if pair < 0.0 {
            break;
        }
        acf_sum += pair;
        lag += 2;
    }
    n as f64 / (1.0 + 2.0 * acf_sum)
}

/// The empirical cumulative surprise distribution W(v) of a posterior
/// sample; evaluation is a binary search over the sorted log-surprise values.
#[derive(Debug, Clone)]
pub struct TruthFunction {
    sorted_log_s: Vec<f64>,
}

impl TruthFunction {
    pub fn len(&self) -> usize {
        self.sorted_log_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_log_s.is_empty()
    }

    /// W at log-surprise value v: exact fraction of draws with log s <= v
    /// (ties count into the sublevel set).
    pub fn w_log(&self, log_v: f64) -> f64 {
        let k = self.sorted_log_s.partition_point(|&x| x <= log_v);
        k as f64 / self.sorted_log_s.len() as f64
    }

    /// 1 - W, the mass of the highest relative surprise set.
    pub fn w_bar_log(&self, log_v: f64) -> f64 {
        1.0 - self.w_log(log_v)
    }

    /// Quantile knots (v, W(v)) for curve export; v on the surprise scale.
    pub fn curve(&self, knots: usize) -> Vec<(f64, f64)> {
        let n = self.sorted_log_s.len();
        let mut out = Vec::with_capacity(knots);
        for i in 0..knots {
            let q = (i as f64 + 0.5) / knots as f64;
            let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
            let v = self.sorted_log_s[idx].exp();
            out.push((v, (idx + 1) as f64 / n as f64));
        }
        out
    }
}

/// Build W from a posterior sample and the surprise function it was drawn
/// under.
pub fn truth_function(sample: &PosteriorSample, sf: &SurpriseFunction) -> Result<TruthFunction> {
    if sample.is_empty() {
        return Err(FbstError::InvalidData("empty posterior sample".into()));
    }
    let mut vals = Vec::with_capacity(sample.len());
    for d in &sample.draws {
        vals.push(sf.log_surprise(d)?);
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(TruthFunction { sorted_log_s: vals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    MonteCarlo,
    Quadrature,
}

/// An e-value estimate: ev in [0,1], its complement, and a standard error.
#[derive(Debug, Clone)]
pub struct EvalEstimate {
    pub ev: f64,
    pub ev_bar: f64,
    pub se: f64,
    pub n: usize,
    pub method: EvalMethod,
}

impl EvalEstimate {
    pub fn new(ev: f64, se: f64, n: usize, method: EvalMethod) -> Self {
        let ev = ev.clamp(0.0, 1.0);
        EvalEstimate { ev, ev_bar: 1.0 - ev, se, n, method }
    }
}

/// ev(H) = W(s*) with binomial standard error at the effective sample size.
pub fn estimate_evalue(w: &TruthFunction, log_s_star: f64, n_eff: f64) -> EvalEstimate {
    let ev = w.w_log(log_s_star);
    let se = (ev * (1.0 - ev) / n_eff.max(1.0)).sqrt();
    EvalEstimate::new(ev, se, w.len(), EvalMethod::MonteCarlo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Conjugate, PosteriorModel};
    use crate::reference::ReferenceDensity;

    fn beta_model(a: f64, b: f64) -> PosteriorModel {
        PosteriorModel::from_conjugate(Conjugate::Beta { a, b }).unwrap()
    }

    #[test]
    fn direct_beta_moments_and_determinism() {
        let m = beta_model(4.0, 2.0);
        let n = 100_000;
        let s = sample_posterior_direct(&m, n, 1234).unwrap();
        let mean: f64 = s.draws.iter().map(|d| d[0]).sum::<f64>() / n as f64;
        // Beta mean 4/6, sd of mean approx sqrt(var/n)
        let var = 4.0 * 2.0 / (36.0 * 7.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 4.0 / 6.0).abs() < 4.0 * se, "mean {mean}");
        let s2 = sample_posterior_direct(&m, n, 1234).unwrap();
        assert_eq!(s.draws, s2.draws);
        for d in s.draws.iter().take(1000) {
            assert!(m.space().contains(d));
        }
    }

    #[test]
    fn direct_dirichlet_moments() {
        let m = PosteriorModel::from_conjugate(Conjugate::Dirichlet {
            alpha: vec![6.0, 3.0, 4.0],
        })
        .unwrap();
        let n = 100_000;
        let s = sample_posterior_direct(&m, n, 7).unwrap();
        let a0 = 13.0;
        for (j, &aj) in [6.0f64, 3.0, 4.0].iter().enumerate() {
            let mean: f64 = s.draws.iter().map(|d| d[j]).sum::<f64>() / n as f64;
            let var = aj * (a0 - aj) / (a0 * a0 * (a0 + 1.0));
            let se = (var / n as f64).sqrt();
            assert!((mean - aj / a0).abs() < 4.0 * se, "component {j}: {mean}");
        }
    }

    #[test]
    fn direct_sampler_unavailable_for_custom() {
        let m = PosteriorModel::custom(crate::space::ParameterSpace::unit_interval("t"), |_| 0.0);
        assert!(sample_posterior_direct(&m, 10, 0).is_err());
    }

    #[test]
    fn mcmc_beta_moments_and_determinism() {
        let m = beta_model(4.0, 2.0);
        let n = 100_000;
        let s = sample_posterior_mcmc(&m, n, 99, &McmcTuning::default()).unwrap();
        let mean: f64 = s.draws.iter().map(|d| d[0]).sum::<f64>() / n as f64;
        let var = 4.0 * 2.0 / (36.0 * 7.0);
        let se = (var / s.ess).sqrt();
        assert!((mean - 4.0 / 6.0).abs() < 4.0 * se, "mean {mean} ess {}", s.ess);
        let diag = s.diagnostics.as_ref().unwrap();
        assert!(
            (0.2..=0.5).contains(&diag.acceptance_rate),
            "acceptance {}",
            diag.acceptance_rate
        );
        let s2 = sample_posterior_mcmc(&m, n, 99, &McmcTuning::default()).unwrap();
        assert_eq!(s.draws, s2.draws);
    }

    #[test]
    fn mcmc_symmetric_target() {
        let m = beta_model(2.0, 2.0);
        let s = sample_posterior_mcmc(&m, 50_000, 3, &McmcTuning::default()).unwrap();
        let mean: f64 = s.draws.iter().map(|d| d[0]).sum::<f64>() / s.len() as f64;
        let var = 2.0 * 2.0 / (16.0 * 5.0);
        let se = (var / s.ess).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn mcmc_never_finite_fails() {
        let m = PosteriorModel::custom(
            crate::space::ParameterSpace::real_line("x"),
            |_| f64::NEG_INFINITY,
        );
        assert!(matches!(
            sample_posterior_mcmc(&m, 100, 0, &McmcTuning::default()),
            Err(FbstError::SamplerFailure(_))
        ));
    }

    #[test]
    fn ess_iid_close_to_n() {
        let m = beta_model(4.0, 2.0);
        let s = sample_posterior_direct(&m, 20_000, 5).unwrap();
        let ess = effective_sample_size(&s.draws);
        assert!(ess > 15_000.0, "ess {ess}");
    }

    #[test]
    fn truth_function_is_a_cdf() {
        let m = beta_model(4.0, 2.0);
        let sf = SurpriseFunction::new(m.clone(), ReferenceDensity::uniform());
        let s = sample_posterior_direct(&m, 50_000, 11).unwrap();
        let w = truth_function(&s, &sf).unwrap();
        assert_eq!(w.w_log(f64::NEG_INFINITY), 0.0);
        assert_eq!(w.w_log(f64::INFINITY), 1.0);
        let mut prev = 0.0;
        for i in -40..40 {
            let v = w.w_log(i as f64 / 10.0);
            assert!(v >= prev);
            prev = v;
        }
        // W at s(0.5) = 1.25 is near the quadrature value 0.2423
        let ev = estimate_evalue(&w, 1.25f64.ln(), s.ess);
        assert!((ev.ev - 0.2423).abs() < 3.0 * ev.se + 0.01, "ev {}", ev.ev);
        assert_eq!(ev.ev + ev.ev_bar, 1.0);
    }

    #[test]
    fn curve_export_shape() {
        let m = beta_model(4.0, 2.0);
        let sf = SurpriseFunction::new(m.clone(), ReferenceDensity::uniform());
        let s = sample_posterior_direct(&m, 10_000, 2).unwrap();
        let w = truth_function(&s, &sf).unwrap();
        let c = w.curve(512);
        assert_eq!(c.len(), 512);
        for win in c.windows(2) {
            assert!(win[0].0 <= win[1].0);
            assert!(win[0].1 <= win[1].1);
        }
    }

    #[test]
    fn mcmc_matches_direct_evalue() {
        // e-values from the two samplers agree within 3 combined SE
        let m = beta_model(4.0, 2.0);
        let sf = SurpriseFunction::new(m.clone(), ReferenceDensity::uniform());
        let log_s_star = sf.log_surprise(&[0.5]).unwrap();
        let sd = sample_posterior_direct(&m, 100_000, 21).unwrap();
        let sm = sample_posterior_mcmc(&m, 100_000, 22, &McmcTuning::default()).unwrap();
        let ed = estimate_evalue(&truth_function(&sd, &sf).unwrap(), log_s_star, sd.ess);
        let em = estimate_evalue(&truth_function(&sm, &sf).unwrap(), log_s_star, sm.ess);
        let comb = (ed.se * ed.se + em.se * em.se).sqrt();
        assert!(
            (ed.ev - em.ev).abs() < 3.0 * comb,
            "direct {} vs mcmc {} (comb se {comb})",
            ed.ev,
            em.ev
        );
    }
}
