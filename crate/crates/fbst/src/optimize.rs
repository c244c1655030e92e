//! The FBST optimization step: derivative-free multi-start search for the
//! supremum of the surprise function over the whole space and over the null
//! set. Two constrained routes are available: an embedding of the null
//! manifold (exact feasibility) and an augmented penalty over the ambient
//! space.

use crate::error::{FbstError, Result};
use crate::hypothesis::{Hypothesis, OptimumReport};
use crate::reference::SurpriseFunction;
use crate::space::{Bound, ParameterSpace};

/// Search budget: multi-start count and max function evaluations per start.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub restarts: usize,
    pub max_evals: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { restarts: 16, max_evals: 10_000 }
    }
}

/// Smooth chart mapping a parameter space onto an unconstrained z-space so
/// local search never leaves the support. This is a search device only; no
/// Jacobian is involved because suprema of s are parameterization-free.
pub struct Chart {
    space: ParameterSpace,
}

impl Chart {
    pub fn new(space: &ParameterSpace) -> Self {
        Chart { space: space.clone() }
    }

    pub fn dim(&self) -> usize {
        self.space.effective_dim()
    }

    pub fn to_ambient(&self, z: &[f64]) -> Vec<f64> {
        if self.space.is_simplex() {
            // stick-breaking
            let k = self.space.ambient_dim();
            let mut rem = 1.0;
            let mut p = Vec::with_capacity(k);
            for &zi in z {
                let v = sigmoid(zi);
                p.push(v * rem);
                rem *= 1.0 - v;
            }
            p.push(rem);
            p
        } else {
            z.iter()
                .zip(self.space.bounds())
                .map(|(&zi, (lo, hi))| coord_from_z(zi, lo, hi))
                .collect()
        }
    }

    /// log |det d theta / d z| at z, in effective coordinates. Needed when
    /// the chart is used as a sampling transform rather than a search device.
    pub fn log_jacobian(&self, z: &[f64]) -> f64 {
        if self.space.is_simplex() {
            let mut log_j = 0.0;
            let mut log_rem = 0.0;
            for &zi in z {
                let v = sigmoid(zi);
                log_j += (v * (1.0 - v)).ln() + log_rem;
                log_rem += (1.0 - v).ln();
            }
            log_j
        } else {
            z.iter()
                .zip(self.space.bounds())
                .map(|(&zi, (lo, hi))| match (lo.value(), hi.value()) {
                    (Some(a), Some(b)) => {
                        let s = sigmoid(zi);
                        (b - a).ln() + (s * (1.0 - s)).ln()
                    }
                    (Some(_), None) => zi,
                    (None, Some(_)) => -zi,
                    (None, None) => 0.0,
                })
                .sum()
        }
    }

    pub fn from_ambient(&self, theta: &[f64]) -> Vec<f64> {
        if self.space.is_simplex() {
            let k = self.space.ambient_dim();
            let mut rem = 1.0;
            let mut z = Vec::with_capacity(k - 1);
            for &pi in &theta[..k - 1] {
                let v = (pi / rem).clamp(1e-12, 1.0 - 1e-12);
                z.push((v / (1.0 - v)).ln());
                rem -= pi;
            }
            z
        } else {
            theta
                .iter()
                .zip(self.space.bounds())
                .map(|(&x, (lo, hi))| z_from_coord(x, lo, hi))
                .collect()
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

fn coord_from_z(z: f64, lo: &Bound, hi: &Bound) -> f64 {
    match (lo.value(), hi.value()) {
        (Some(a), Some(b)) => a + (b - a) * sigmoid(z),
        (Some(a), None) => a + z.exp(),
        (None, Some(b)) => b - (-z).exp(),
        (None, None) => z,
    }
}

fn z_from_coord(x: f64, lo: &Bound, hi: &Bound) -> f64 {
    match (lo.value(), hi.value()) {
        (Some(a), Some(b)) => {
            let u = ((x - a) / (b - a)).clamp(1e-12, 1.0 - 1e-12);
            (u / (1.0 - u)).ln()
        }
        (Some(a), None) => (x - a).max(1e-300).ln(),
        (None, Some(b)) => -((b - x).max(1e-300).ln()),
        (None, None) => x,
    }
}

/// Nelder-Mead maximization of f from x0. Returns (x_best, f_best, evals,
/// converged).
pub fn nelder_mead<F>(
    f: &F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return (x0.to_vec(), f(x0), 1, true);
    }
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    // simplex of n+1 vertices
    let mut verts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        verts.push(v);
    }
    let mut fv: Vec<f64> = verts.iter().map(|v| eval(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals.get() < max_evals {
        // sort descending by f (maximization)
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[b].partial_cmp(&fv[a]).unwrap());
        let verts2: Vec<Vec<f64>> = idx.iter().map(|&i| verts[i].clone()).collect();
        let fv2: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
        verts = verts2;
        fv = fv2;

        let spread = fv[0] - fv[n];
        let diam: f64 = (0..n)
            .map(|j| {
                verts
                    .iter()
                    .map(|v| v[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    })
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        if (spread.abs() < 1e-13 * (1.0 + fv[0].abs()) && diam < 1e-9) || diam < 1e-12 {
            converged = true;
            break;
        }

        // centroid of all but worst
        let centroid: Vec<f64> = (0..n)
            .map(|j| verts[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = verts[n].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let fr = eval(&reflect);
        if fr > fv[0] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let fe = eval(&expand);
            if fe > fr {
                verts[n] = expand;
                fv[n] = fe;
            } else {
                verts[n] = reflect;
                fv[n] = fr;
            }
        } else if fr > fv[n - 1] {
            verts[n] = reflect;
            fv[n] = fr;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            let fc = eval(&contract);
            if fc > fv[n] {
                verts[n] = contract;
                fv[n] = fc;
            } else {
                // shrink toward best
                for i in 1..=n {
                    let best = verts[0].clone();
                    for j in 0..n {
                        verts[i][j] = best[j] + sigma * (verts[i][j] - best[j]);
                    }
                    fv[i] = eval(&verts[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if fv[i] > fv[best] {
            best = i;
        }
    }
    (verts[best].clone(), fv[best], evals.get(), converged)
}

/// Deterministic low-discrepancy start points (Halton sequence) in z-space,
/// scaled to cover the central region of the chart.
fn halton_starts(dim: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let mut starts = Vec::with_capacity(count);
    for i in 0..count {
        let mut z = Vec::with_capacity(dim);
        for (j, _) in (0..dim).enumerate() {
            let base = PRIMES[j % PRIMES.len()];
            let u = radical_inverse(i as u64 + 1, base);
            z.push(6.0 * (u - 0.5)); // z in (-3, 3)
        }
        starts.push(z);
    }
    starts
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 0.0;
    let mut f = 1.0 / base as f64;
    while i > 0 {
        inv += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    inv
}

fn multistart_maximize<F>(
    f: &F,
    dim: usize,
    extra_starts: &[Vec<f64>],
    budget: &Budget,
) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut starts = extra_starts.to_vec();
    starts.extend(halton_starts(dim, budget.restarts));
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut total_evals = 0usize;
    for s in &starts {
        let (x, v, e, c) = nelder_mead(f, s, 0.25, budget.max_evals);
        total_evals += e;
        let better = match &best {
            Some((_, bv, _)) => v > *bv,
            None => true,
        };
        if better {
            best = Some((x, v, c));
        }
    }
    let (x, v, c) = best.expect("at least one start");
    (x, v, total_evals, c)
}

/// Supremum of the surprise function over the whole parameter space. For
/// conjugate models the closed-form mode seeds the search, so the optimum is
/// exact there.
pub fn sup_surprise_global(sf: &SurpriseFunction, budget: &Budget) -> Result<OptimumReport> {
    let space = sf.space().clone();
    let chart = Chart::new(&space);
    let objective = |z: &[f64]| {
        let theta = chart.to_ambient(z);
        sf.log_surprise(&theta).unwrap_or(f64::NEG_INFINITY)
    };
    let mut extra = Vec::new();
    if let Some(c) = sf.posterior().conjugate() {
        if sf.reference().kind() == crate::reference::ReferenceKind::Uniform {
            if let Some(mode) = c.mode() {
                if space.strictly_interior(&mode, 1e-12) {
                    extra.push(chart.from_ambient(&mode));
                }
            }
        }
    }
    let (z, v, evals, converged) = multistart_maximize(&objective, chart.dim(), &extra, budget);
    if v == f64::NEG_INFINITY {
        return Err(FbstError::OptimizerFailure(
            "no finite surprise value found over the parameter space".into(),
        ));
    }
    // prefer the exact closed-form mode when it was seeded and not improved
    let maximizer = if !extra.is_empty() && objective(&extra[0]) >= v {
        chart.to_ambient(&extra[0])
    } else {
        chart.to_ambient(&z)
    };
    let log_sup = sf.log_surprise(&maximizer)?;
    Ok(OptimumReport {
        maximizer,
        log_sup,
        converged,
        restarts: budget.restarts + extra.len(),
        evaluations: evals,
        constraint_residual: 0.0,
    })
}

/// Supremum of the surprise over the null set. Uses the embedding route when
/// available, the augmented penalty route otherwise.
pub fn sup_surprise_hypothesis(
    sf: &SurpriseFunction,
    hypothesis: &Hypothesis,
    budget: &Budget,
) -> Result<OptimumReport> {
    if hypothesis.is_unconstrained() {
        return sup_surprise_global(sf, budget);
    }
    hypothesis.h_dim(sf.space())?;
    if hypothesis.embedding().is_some() {
        sup_surprise_embedding(sf, hypothesis, budget)
    } else {
        sup_surprise_penalty(sf, hypothesis, budget)
    }
}

/// Embedding route: search over the u-parameterization of the null manifold.
pub fn sup_surprise_embedding(
    sf: &SurpriseFunction,
    hypothesis: &Hypothesis,
    budget: &Budget,
) -> Result<OptimumReport> {
    let embedding = hypothesis.embedding().ok_or_else(|| {
        FbstError::InvalidData("hypothesis has no embedding".into())
    })?;
    if embedding.dim() == 0 {
        // zero-dimensional null set: plain evaluation at the point
        let theta = embedding.embed(&[]);
        let log_sup = sf.log_surprise(&theta)?;
        if log_sup == f64::NEG_INFINITY && !sf.space().contains(&theta) {
            return Err(FbstError::InfeasibleHypothesis(format!(
                "hypothesis point {theta:?} is outside the support"
            )));
        }
        let residual = hypothesis.residual(&theta);
        return Ok(OptimumReport {
            maximizer: theta,
            log_sup,
            converged: true,
            restarts: 0,
            evaluations: 1,
            constraint_residual: residual,
        });
    }
    let chart = Chart::new(&embedding.domain);
    let emb = embedding.clone();
    let objective = |z: &[f64]| {
        let u = chart.to_ambient(z);
        let theta = emb.embed(&u);
        sf.log_surprise(&theta).unwrap_or(f64::NEG_INFINITY)
    };
    let (z, v, evals, converged) = multistart_maximize(&objective, chart.dim(), &[], budget);
    if v == f64::NEG_INFINITY {
        return Err(FbstError::InfeasibleHypothesis(
            "no feasible point with finite surprise found on the null manifold".into(),
        ));
    }
    let theta = embedding.embed(&chart.to_ambient(&z));
    Ok(OptimumReport {
        maximizer: theta.clone(),
        log_sup: sf.log_surprise(&theta)?,
        converged,
        restarts: budget.restarts,
        evaluations: evals,
        constraint_residual: hypothesis.residual(&theta),
    })
}

/// Augmented penalty route: maximize log s - lambda.h - mu(|h|^2 + hinge(g)^2)
/// over the ambient space, tightening mu until the residual is within
/// tolerance.
pub fn sup_surprise_penalty(
    sf: &SurpriseFunction,
    hypothesis: &Hypothesis,
    budget: &Budget,
) -> Result<OptimumReport> {
    let space = sf.space().clone();
    let chart = Chart::new(&space);
    let n_eq = hypothesis.equality_count();
    let mut lambda = vec![0.0f64; n_eq];
    let mut mu = 10.0f64;
    let mut total_evals = 0usize;

    let mut current: Option<(Vec<f64>, f64)> = None; // (z, log s)
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for outer in 0..30 {
        let lam = lambda.clone();
        let objective = |z: &[f64]| {
            let theta = chart.to_ambient(z);
            let ls = match sf.log_surprise(&theta) {
                Ok(v) => v,
                Err(_) => return f64::NEG_INFINITY,
            };
            if ls == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let (h, g, _) = match hypothesis.evaluate_constraints(&space, &theta) {
                Ok(x) => x,
                Err(_) => return f64::NEG_INFINITY,
            };
            let mut pen = 0.0;
            for (hi, li) in h.iter().zip(&lam) {
                pen += li * hi + mu * hi * hi;
            }
            for gj in &g {
                let viol = gj.max(0.0);
                pen += mu * viol * viol;
            }
            ls - pen
        };
        let extra: Vec<Vec<f64>> = current.iter().map(|(z, _)| z.clone()).collect();
        let inner_budget = if outer == 0 {
            *budget
        } else {
            Budget { restarts: 2, max_evals: budget.max_evals }
        };
        let (z, v, evals, conv) = multistart_maximize(&objective, chart.dim(), &extra, &inner_budget);
        total_evals += evals;
        if v == f64::NEG_INFINITY {
            return Err(FbstError::InfeasibleHypothesis(
                "penalty search found no finite objective".into(),
            ));
        }
        let theta = chart.to_ambient(&z);
        let (h, _, _) = hypothesis.evaluate_constraints(&space, &theta)?;
        residual = hypothesis.residual(&theta);
        current = Some((z, sf.log_surprise(&theta)?));
        converged = conv;
        if residual <= 1e-9 {
            break;
        }
        for (li, hi) in lambda.iter_mut().zip(&h) {
            *li += 2.0 * mu * hi;
        }
        mu *= 10.0;
    }
    let (z, log_sup) = current.expect("at least one outer iteration");
    let theta = chart.to_ambient(&z);
    if residual > crate::hypothesis::CONSTRAINT_TOL {
        return Err(FbstError::OptimizerFailure(format!(
            "penalty route stalled at constraint residual {residual:.3e}"
        )));
    }
    Ok(OptimumReport {
        maximizer: theta,
        log_sup,
        converged,
        restarts: budget.restarts,
        evaluations: total_evals,
        constraint_residual: residual,
    })
}

/// Round-off clamp: the constrained supremum can never exceed the global
/// one; clamping protects downstream e-values from exceeding 1.
pub fn clamp_to_global(constrained: &mut OptimumReport, global: &OptimumReport) {
    if constrained.log_sup > global.log_sup {
        constrained.log_sup = global.log_sup;
    }
}
