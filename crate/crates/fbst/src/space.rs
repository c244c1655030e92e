//! Parameter spaces: per-coordinate supports plus the probability simplex.

use crate::error::{FbstError, Result};

pub const SUPPORT_TOL: f64 = 1e-12;

/// One-sided bound of a coordinate support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Open(f64),
    Closed(f64),
    Infinite,
}

impl Bound {
    fn lower_ok(&self, x: f64) -> bool {
        match *self {
            Bound::Open(a) => x > a - SUPPORT_TOL && x != a,
            Bound::Closed(a) => x >= a - SUPPORT_TOL,
            Bound::Infinite => true,
        }
    }
    fn upper_ok(&self, x: f64) -> bool {
        match *self {
            Bound::Open(b) => x < b + SUPPORT_TOL && x != b,
            Bound::Closed(b) => x <= b + SUPPORT_TOL,
            Bound::Infinite => true,
        }
    }
    pub fn value(&self) -> Option<f64> {
        match *self {
            Bound::Open(v) | Bound::Closed(v) => Some(v),
            Bound::Infinite => None,
        }
    }
}

/// The space Θ the parameter lives in. Simplex spaces keep all K ambient
/// coordinates; the effective dimension t used for dimension bookkeeping is
/// K - 1 there.
#[derive(Debug, Clone)]
pub struct ParameterSpace {
    labels: Vec<String>,
    bounds: Vec<(Bound, Bound)>,
    simplex: bool,
}

impl ParameterSpace {
    pub fn new(labels: Vec<String>, bounds: Vec<(Bound, Bound)>, simplex: bool) -> Result<Self> {
        if labels.is_empty() || labels.len() != bounds.len() {
            return Err(FbstError::InvalidData(format!(
                "parameter space needs matching labels ({}) and bounds ({})",
                labels.len(),
                bounds.len()
            )));
        }
        if simplex && labels.len() < 2 {
            return Err(FbstError::InvalidData(
                "simplex space needs at least 2 coordinates".into(),
            ));
        }
        Ok(ParameterSpace { labels, bounds, simplex })
    }

    pub fn unit_interval(label: &str) -> Self {
        ParameterSpace {
            labels: vec![label.to_string()],
            bounds: vec![(Bound::Open(0.0), Bound::Open(1.0))],
            simplex: false,
        }
    }

    pub fn positive_half_line(label: &str) -> Self {
        ParameterSpace {
            labels: vec![label.to_string()],
            bounds: vec![(Bound::Open(0.0), Bound::Infinite)],
            simplex: false,
        }
    }

    pub fn real_line(label: &str) -> Self {
        ParameterSpace {
            labels: vec![label.to_string()],
            bounds: vec![(Bound::Infinite, Bound::Infinite)],
            simplex: false,
        }
    }

    pub fn simplex(k: usize) -> Self {
        ParameterSpace {
            labels: (0..k).map(|i| format!("p{}", i + 1)).collect(),
            bounds: vec![(Bound::Open(0.0), Bound::Open(1.0)); k],
            simplex: true,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bounds(&self) -> &[(Bound, Bound)] {
        &self.bounds
    }

    pub fn is_simplex(&self) -> bool {
        self.simplex
    }

    /// Number of stored coordinates.
    pub fn ambient_dim(&self) -> usize {
        self.labels.len()
    }

    /// Effective dimension t: ambient minus one for simplex spaces.
    pub fn effective_dim(&self) -> usize {
        if self.simplex {
            self.ambient_dim() - 1
        } else {
            self.ambient_dim()
        }
    }

    pub fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.ambient_dim() {
            return Err(FbstError::DimensionMismatch {
                expected: self.ambient_dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Whether the point satisfies the support constraints to tolerance.
    pub fn contains(&self, point: &[f64]) -> bool {
        if point.len() != self.ambient_dim() {
            return false;
        }
        for (x, (lo, hi)) in point.iter().zip(&self.bounds) {
            if !x.is_finite() || !lo.lower_ok(*x) || !hi.upper_ok(*x) {
                return false;
            }
        }
        if self.simplex {
            let sum: f64 = point.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return false;
            }
        }
        true
    }

    /// Strict interior test with margin, used to seed optimizers and chains.
    pub fn strictly_interior(&self, point: &[f64], margin: f64) -> bool {
        if !self.contains(point) {
            return false;
        }
        for (x, (lo, hi)) in point.iter().zip(&self.bounds) {
            if let Some(a) = lo.value() {
                if *x - a < margin {
                    return false;
                }
            }
            if let Some(b) = hi.value() {
                if b - *x < margin {
                    return false;
                }
            }
        }
        true
    }
}
