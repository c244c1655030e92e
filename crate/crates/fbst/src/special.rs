//! Special functions: log-gamma, regularized incomplete gamma, and the
//! chi-square CDF / quantile pair used by the asymptotic confidence transform.

use crate::error::{FbstError, Result};

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 500;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized lower incomplete gamma P(a, x) = γ(a,x) / Γ(a).
///
/// Series expansion for x < a + 1, Lentz continued fraction otherwise.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_p requires a > 0");
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series: P(a,x) = x^a e^-x / Γ(a) * Σ x^k Γ(a)/Γ(a+1+k)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (log_prefix.exp() * sum).min(1.0)
    } else {
        // continued fraction for Q(a,x), modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let q = log_prefix.exp() * h;
        (1.0 - q).clamp(0.0, 1.0)
    }
}

/// Chi-square CDF with k degrees of freedom. k = 0 is the point mass at
/// zero: the CDF is identically 1 for x >= 0.
pub fn chi2_cdf(k: u32, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(FbstError::InvalidData(format!("chi2_cdf: x = {x} < 0")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    Ok(gamma_p(k as f64 / 2.0, x / 2.0))
}

/// Chi-square quantile, inverse of `chi2_cdf` in x. Bisection on an
/// exponentially expanded bracket; the CDF is strictly increasing for k >= 1.
pub fn chi2_quantile(k: u32, c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(FbstError::InvalidData(format!(
            "chi2_quantile: c = {c} outside [0,1]"
        )));
    }
    if k == 0 || c == 0.0 {
        return Ok(0.0);
    }
    if c == 1.0 {
        return Ok(f64::INFINITY);
    }
    let kf = k as f64;
    let mut hi = kf + 10.0 * (2.0 * kf).sqrt() + 10.0;
    while chi2_cdf(k, hi)? < c {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(FbstError::InvalidData("chi2_quantile: bracket overflow".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(k, mid)? < c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One-sample Kolmogorov-Smirnov distance between the empirical CDF of
/// `values` and Uniform[0,1].
pub fn ks_uniform_statistic(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &u) in v.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_two_dof_is_exponential() {
        // closed form: 1 - exp(-x/2)
        for &x in &[0.1, 0.5, 1.0, 2.0 * std::f64::consts::LN_2, 5.0, 20.0] {
            let expect = 1.0 - (-x / 2.0).exp();
            assert!((chi2_cdf(2, x).unwrap() - expect).abs() < 1e-12);
        }
        assert!((chi2_cdf(2, 2.0 * std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi2_one_dof_matches_erf_oracle() {
        // Chi2(1, x) = 2Φ(√x) − 1 = erf(√(x/2))
        for &x in &[0.01, 0.5, 1.3863, 4.0, 9.0] {
            let expect = libm::erf((x / 2.0f64).sqrt());
            assert!((chi2_cdf(1, x).unwrap() - expect).abs() < 1e-10);
        }
        assert!((chi2_cdf(1, 1.3863).unwrap() - 0.7610).abs() < 1e-4);
    }

    #[test]
    fn chi2_boundaries() {
        for k in 1..10 {
            assert_eq!(chi2_cdf(k, 0.0).unwrap(), 0.0);
            assert_eq!(chi2_quantile(k, 0.0).unwrap(), 0.0);
        }
        assert_eq!(chi2_cdf(0, 0.0).unwrap(), 1.0);
        assert_eq!(chi2_cdf(0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in [1u32, 2, 3, 5, 10, 30] {
            for i in 1..20 {
                let c = i as f64 / 20.0;
                let x = chi2_quantile(k, c).unwrap();
                let back = chi2_cdf(k, x).unwrap();
                assert!(
                    (back - c).abs() < 1e-10,
                    "k={k} c={c} x={x} back={back}"
                );
            }
        }
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(chi2_cdf(3, -1.0).is_err());
        assert!(chi2_quantile(3, 1.5).is_err());
    }

    #[test]
    fn ks_statistic_basics() {
        // perfectly spaced grid has distance 1/(2n) with midpoints
        let n = 100;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!((ks_uniform_statistic(&v) - 0.005).abs() < 1e-12);
        // degenerate sample at 0 has distance 1
        assert!((ks_uniform_statistic(&[0.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
    }
}
