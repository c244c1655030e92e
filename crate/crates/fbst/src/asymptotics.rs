//! Asymptotic confidence transform, standardized e-value, and the
//! three-way decision rule.

use crate::error::{FbstError, Result};
use crate::special::{chi2_cdf, chi2_quantile};

/// QQ(t, h, c) = Chi2(t - h, Chi2^{-1}(t, c)): the large-sample confidence
/// transform for the evidence against a true sharp hypothesis with
/// t = dim(Theta) and h = dim(H).
pub fn qq_confidence(t: u32, h: u32, c: f64) -> Result<f64> {
    if t < 1 {
        return Err(FbstError::InvalidData("t must be >= 1".into()));
    }
    if h > t {
        return Err(FbstError::InvalidData(format!("h = {h} exceeds t = {t}")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(FbstError::InvalidData(format!("c = {c} outside [0,1]")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    if c == 1.0 {
        return Ok(1.0);
    }
    let x = chi2_quantile(t, c)?;
    chi2_cdf(t - h, x)
}

/// Numerical inverse of c -> QQ(t, h, c) on [0, 1].
pub fn qq_inverse(t: u32, h: u32, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(FbstError::InvalidData(format!("q = {q} outside [0,1]")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qq_confidence(t, h, mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Standardized e-value sev = 1 - QQ(t, h, ev_bar). Asymptotically uniform
/// under a true hypothesis; defined only for hypotheses with at least one
/// equality constraint (h = t - m with m >= 1 puts h < t).
pub fn standardized_evalue(t: u32, h: u32, ev_bar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ev_bar) {
        return Err(FbstError::InvalidData(format!(
            "ev_bar = {ev_bar} outside [0,1]"
        )));
    }
    Ok(1.0 - qq_confidence(t, h, ev_bar)?)
}

/// Cut-off thresholds for the Reject / Neutral / Accept trichotomy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionThresholds {
    pub c1: f64,
    pub c2: f64,
}

impl DecisionThresholds {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
            return Err(FbstError::InvalidData(format!(
                "thresholds must satisfy 0 < c1 < c2 < 1, got ({c1}, {c2})"
            )));
        }
        Ok(DecisionThresholds { c1, c2 })
    }
}

impl Default for DecisionThresholds {
    fn default() -> Self {
        DecisionThresholds { c1: 0.05, c2: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Reject,
    Neutral,
    Accept,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Reject => "Reject",
            Verdict::Neutral => "Neutral",
            Verdict::Accept => "Accept",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub verdict: Verdict,
    pub sev: f64,
    pub thresholds: DecisionThresholds,
}

/// Reject on [0, c1), Neutral on [c1, c2), Accept on [c2, 1].
pub fn decide(sev: f64, thresholds: DecisionThresholds) -> Decision {
    let verdict = if sev < thresholds.c1 {
        Verdict::Reject
    } else if sev < thresholds.c2 {
        Verdict::Neutral
    } else {
        Verdict::Accept
    };
    Decision { verdict, sev, thresholds }
}

/// Possibilistic disjunction: the support of a disjunction of hypotheses is
/// the maximum support among the disjuncts.
pub fn disjunction_evalue(evs: &[f64]) -> Result<f64> {
    if evs.is_empty() {
        return Err(FbstError::InvalidData("empty e-value list".into()));
    }
    for &e in evs {
        if !(0.0..=1.0).contains(&e) {
            return Err(FbstError::InvalidData(format!("e-value {e} outside [0,1]")));
        }
    }
    Ok(evs.iter().cloned().fold(0.0, f64::max))
}

/// Conservative empirical quantile: order statistic with ceiling index.
pub fn empirical_quantile_ceil(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if q <= 0.0 {
        // alpha = 0 edge: the maximum
        return *v.last().unwrap();
    }
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// One row of a calibration table: the empirical critical level c(n).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub n: u64,
    pub critical_level: f64,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationTable {
    pub rows: Vec<CalibrationRow>,
}

impl CalibrationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,c_n,replicates,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n, r.critical_level, r.replicates, r.seed
            ));
        }
        out
    }
}
