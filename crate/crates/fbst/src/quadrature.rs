//! Deterministic quadrature route for the e-value in low dimensions. This
//! is the exact-integration path (no sampling, no asymptotics) and doubles
//! as the oracle the Monte Carlo route is tested against.

use crate::error::{FbstError, Result};
use crate::integrate::{EvalEstimate, EvalMethod};
use crate::reference::SurpriseFunction;
use crate::space::{Bound, ParameterSpace};

/// Adaptive Simpson on [a, b]. `f` must be finite (use 0 for off-support).
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_rec(f, a, b, fa, fb, fm, simpson(a, b, fa, fm, fb), tol, 50)
}

/// Composite adaptive Simpson: uniform panels first, refinement within
/// each, so that features much narrower than the interval are not missed
/// by the initial three-point stencil.
fn integrate_segment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let panels = (((b - a) * 1024.0).ceil() as usize).clamp(8, 1024);
    let h = (b - a) / panels as f64;
    let per_panel_tol = tol / panels as f64;
    let mut sum = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == panels { b } else { lo + h };
        sum += adaptive_simpson(f, lo, hi, per_panel_tol);
    }
    sum
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1)
    }
}

/// Map the coordinate support onto the open unit interval. Returns
/// (theta(u), d theta / d u).
fn unit_transform(lo: &Bound, hi: &Bound) -> impl Fn(f64) -> (f64, f64) {
    let lo = lo.value();
    let hi = hi.value();
    move |u: f64| match (lo, hi) {
        (Some(a), Some(b)) => (a + (b - a) * u, b - a),
        (Some(a), None) => {
            let w = 1.0 - u;
            (a + u / w, 1.0 / (w * w))
        }
        (None, Some(b)) => {
            let w = 1.0 - u;
            (b - u / w, 1.0 / (w * w))
        }
        (None, None) => {
            // theta = tan(pi (u - 1/2))
            let t = std::f64::consts::PI * (u - 0.5);
            (t.tan(), std::f64::consts::PI / t.cos().powi(2))
        }
    }
}

/// Roots of `f` on (0,1) located by a sign scan over a fine grid plus
/// bisection. `f` may be -inf near the endpoints.
fn bracketed_roots<F: Fn(f64) -> f64>(f: &F, grid: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let eval = |u: f64| f(u);
    let mut prev_u = 0.5 / grid as f64;
    let mut prev = eval(prev_u);
    for i in 1..grid {
        let u = (i as f64 + 0.5) / grid as f64;
        let v = eval(u);
        if prev.is_finite() && v.is_finite() && (prev <= 0.0) != (v <= 0.0) {
            let (mut a, mut b) = (prev_u, u);
            let mut fa = prev;
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = eval(m);
                if (fa <= 0.0) == (fm <= 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_u = u;
        prev = v;
    }
    roots
}

/// Deterministic e-value by quadrature of the normalized posterior over the
/// sublevel set {s <= s*}. Supports effective dimension 1, the 3-category
/// simplex, and 2-dimensional product spaces.
pub fn quadrature_evalue(sf: &SurpriseFunction, log_s_star: f64) -> Result<EvalEstimate> {
    let space = sf.space().clone();
    match (space.effective_dim(), space.is_simplex()) {
        (1, false) => quadrature_1d(sf, &space, log_s_star),
        (2, true) => quadrature_simplex3(sf, log_s_star),
        (2, false) => quadrature_2d(sf, &space, log_s_star),
        (d, _) => Err(FbstError::Unsupported(format!(
            "quadrature route supports dimension <= 2, got {d}"
        ))),
    }
}

fn quadrature_1d(
    sf: &SurpriseFunction,
    space: &ParameterSpace,
    log_s_star: f64,
) -> Result<EvalEstimate> {
    let (lo, hi) = space.bounds()[0];
    let tr = unit_transform(&lo, &hi);
    let log_post = |u: f64| -> f64 {
        let (theta, _) = tr(u);
        sf.posterior()
            .log_potential(&[theta])
            .unwrap_or(f64::NEG_INFINITY)
    };
    // scale shift for stable exponentiation
    const GRID: usize = 4096;
    let mut shift = f64::NEG_INFINITY;
    for i in 0..GRID {
        let u = (i as f64 + 0.5) / GRID as f64;
        shift = shift.max(log_post(u));
    }
    if shift == f64::NEG_INFINITY {
        return Err(FbstError::InvalidData(
            "posterior has no finite density on the support".into(),
        ));
    }
    let dens = |u: f64| -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let (_, jac) = tr(u);
        let lp = log_post(u);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            (lp - shift).exp() * jac
        }
    };
    let excess = |u: f64| -> f64 {
        let (theta, _) = tr(u);
        let ls = sf.log_surprise(&[theta]).unwrap_or(f64::NEG_INFINITY);
        if ls.is_finite() {
            ls - log_s_star
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut cuts = vec![0.0];
    cuts.extend(bracketed_roots(&excess, GRID));
    cuts.push(1.0);
    let mut mass = 0.0;
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 1e-14 {
            continue;
        }
        let seg = integrate_segment(&dens, a, b, 1e-12);
        total += seg;
        let mid = 0.5 * (a + b);
        let e = excess(mid);
        // the sublevel set is weak: s <= s* counts in
        if e <= 0.0 || e == f64::NEG_INFINITY {
            mass += seg;
        }
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(FbstError::InvalidData(
            "posterior does not integrate to a finite positive constant".into(),
        ));
    }
    let ev = (mass / total).clamp(0.0, 1.0);
    Ok(EvalEstimate::new(ev, 0.0, 0, EvalMethod::Quadrature))
}

fn quadrature_simplex3(sf: &SurpriseFunction, log_s_star: f64) -> Result<EvalEstimate> {
    // midpoint rule over the (p1, p2) triangle
    const N: usize = 1500;
    let h = 1.0 / N as f64;
    let mut shift = f64::NEG_INFINITY;
    let mut cache: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..N {
        let p1 = (i as f64 + 0.5) * h;
        for j in 0..N - i {
            let p2 = (j as f64 + 0.5) * h;
            let p3 = 1.0 - p1 - p2;
            if p3 <= 0.0 {
                continue;
            }
            let lp = sf
                .posterior()
                .log_potential(&[p1, p2, p3])
                .unwrap_or(f64::NEG_INFINITY);
            if lp > f64::NEG_INFINITY {
                shift = shift.max(lp);
                cache.push((i, j, lp));
            }
        }
    }
    if cache.is_empty() {
        return Err(FbstError::InvalidData(
            "posterior has no finite density on the simplex".into(),
        ));
    }
    let mut total = 0.0;
    let mut mass = 0.0;
    for (i, j, lp) in cache {
        let p1 = (i as f64 + 0.5) * h;
        let p2 = (j as f64 + 0.5) * h;
        let p3 = 1.0 - p1 - p2;
        let w = (lp - shift).exp();
        total += w;
        let ls = sf.log_surprise(&[p1, p2, p3]).unwrap_or(f64::NEG_INFINITY);
        if ls <= log_s_star {
            mass += w;
        }
    }
    Ok(EvalEstimate::new(mass / total, 0.0, 0, EvalMethod::Quadrature))
}

fn quadrature_2d(
    sf: &SurpriseFunction,
    space: &ParameterSpace,
    log_s_star: f64,
) -> Result<EvalEstimate> {
    const N: usize = 1200;
    let (lo1, hi1) = space.bounds()[0];
    let (lo2, hi2) = space.bounds()[1];
    let t1 = unit_transform(&lo1, &hi1);
    let t2 = unit_transform(&lo2, &hi2);
    let mut shift = f64::NEG_INFINITY;
    let mut vals = vec![f64::NEG_INFINITY; N * N];
    let mut jacs = vec![0.0; N * N];
    for i in 0..N {
        let u = (i as f64 + 0.5) / N as f64;
        let (x, jx) = t1(u);
        for j in 0..N {
            let v = (j as f64 + 0.5) / N as f64;
            let (y, jy) = t2(v);
            let lp = sf
                .posterior()
                .log_potential(&[x, y])
                .unwrap_or(f64::NEG_INFINITY);
            if lp > f64::NEG_INFINITY {
                let lw = lp + (jx * jy).ln();
                vals[i * N + j] = lw;
                jacs[i * N + j] = 1.0;
                shift = shift.max(lw);
            }
        }
    }
    if shift == f64::NEG_INFINITY {
        return Err(FbstError::InvalidData(
            "posterior has no finite density on the support".into(),
        ));
    }
    let mut total = 0.0;
    let mut mass = 0.0;
    for i in 0..N {
        let u = (i as f64 + 0.5) / N as f64;
        let (x, _) = t1(u);
        for j in 0..N {
            if jacs[i * N + j] == 0.0 {
                continue;
            }
            let v = (j as f64 + 0.5) / N as f64;
            let (y, _) = t2(v);
            let w = (vals[i * N + j] - shift).exp();
            total += w;
            let ls = sf.log_surprise(&[x, y]).unwrap_or(f64::NEG_INFINITY);
            if ls <= log_s_star {
                mass += w;
            }
        }
    }
    Ok(EvalEstimate::new(mass / total, 0.0, 0, EvalMethod::Quadrature))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Conjugate, PosteriorModel};
    use crate::reference::{ReferenceDensity, SurpriseFunction};

    fn sf_beta(a: f64, b: f64) -> SurpriseFunction {
        SurpriseFunction::new(
            PosteriorModel::from_conjugate(Conjugate::Beta { a, b }).unwrap(),
            ReferenceDensity::uniform(),
        )
    }

    #[test]
    fn beta42_point_half_matches_cdf_oracle() {
        // independent oracle: Beta(4,2) CDF is 5t^4 - 4t^5; the sublevel set
        // of s* = s(0.5) is [0, 0.5] plus [r, 1] with r the upper root of
        // t^3(1-t) = 0.0625
        let sf = sf_beta(4.0, 2.0);
        let log_s_star = sf.log_surprise(&[0.5]).unwrap();
        let cdf = |t: f64| 5.0 * t.powi(4) - 4.0 * t.powi(5);
        let (mut a, mut b) = (0.75f64, 1.0 - 1e-12);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m.powi(3) * (1.0 - m) > 0.0625 {
                a = m;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        let oracle = cdf(0.5) + 1.0 - cdf(r);
        assert!((oracle - 0.242306).abs() < 1e-4, "oracle {oracle}");
        let est = quadrature_evalue(&sf, log_s_star).unwrap();
        assert!(
            (est.ev - oracle).abs() < 1e-6,
            "quadrature {} vs oracle {oracle}",
            est.ev
        );
    }

    #[test]
    fn mode_case_is_exactly_one() {
        let sf = sf_beta(2.0, 2.0);
        let log_s_star = sf.log_surprise(&[0.5]).unwrap();
        let est = quadrature_evalue(&sf, log_s_star).unwrap();
        assert_eq!(est.ev, 1.0);
    }

    #[test]
    fn zero_density_hypothesis_gives_zero() {
        let sf = sf_beta(4.0, 2.0);
        let est = quadrature_evalue(&sf, f64::NEG_INFINITY).unwrap();
        assert_eq!(est.ev, 0.0);
    }

    #[test]
    fn ev_monotone_in_s_star() {
        let sf = sf_beta(4.0, 2.0);
        let mut prev = -1.0;
        for &t in &[0.05, 0.2, 0.35, 0.5, 0.65, 0.75] {
            let ls = sf.log_surprise(&[t]).unwrap();
            let ev = quadrature_evalue(&sf, ls).unwrap().ev;
            // s(t) increases toward the mode at 0.75, so ev must too
            assert!(ev >= prev - 1e-12, "t={t}: {ev} < {prev}");
            prev = ev;
        }
    }

    #[test]
    fn gamma_posterior_halfline_support() {
        // Gamma(3, rate 2) with point s* at lambda = 2; cross-check against
        // a plain midpoint-grid oracle
        let sf = SurpriseFunction::new(
            PosteriorModel::from_conjugate(Conjugate::GammaRate { a: 3.0, b: 2.0 }).unwrap(),
            ReferenceDensity::uniform(),
        );
        let log_s_star = sf.log_surprise(&[2.0]).unwrap();
        let est = quadrature_evalue(&sf, log_s_star).unwrap();
        let n = 400_000;
        let upper = 30.0;
        let h = upper / n as f64;
        let mut total = 0.0;
        let mut mass = 0.0;
        for i in 0..n {
            let l = (i as f64 + 0.5) * h;
            let d = l * l * (-2.0 * l).exp();
            total += d;
            if sf.log_surprise(&[l]).unwrap() <= log_s_star {
                mass += d;
            }
        }
        let oracle = mass / total;
        assert!(
            (est.ev - oracle).abs() < 1e-4,
            "quadrature {} vs grid {oracle}",
            est.ev
        );
    }

    #[test]
    fn simplex_hwe_matches_frozen_grid_oracle() {
        // frozen before the build from an independent grid oracle
        let sf = SurpriseFunction::new(
            PosteriorModel::from_conjugate(Conjugate::Dirichlet {
                alpha: vec![6.0, 3.0, 4.0],
            })
            .unwrap(),
            ReferenceDensity::uniform(),
        );
        // s* on the Hardy-Weinberg curve, maximized at p = 0.6
        let p = 0.6;
        let log_s_star = sf
            .log_surprise(&[p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)])
            .unwrap();
        let est = quadrature_evalue(&sf, log_s_star).unwrap();
        assert!((est.ev - 0.114122).abs() < 5e-4, "ev {}", est.ev);
    }

    #[test]
    fn dimension_above_two_rejected() {
        let sf = SurpriseFunction::new(
            PosteriorModel::from_conjugate(Conjugate::Dirichlet {
                alpha: vec![2.0, 2.0, 2.0, 2.0],
            })
            .unwrap(),
            ReferenceDensity::uniform(),
        );
        assert!(quadrature_evalue(&sf, 0.0).is_err());
    }
}
