//! Null sets Theta_H given by equality / inequality constraints, with an
//! optional embedding that parameterizes the null manifold directly.

use std::sync::Arc;

use crate::error::{FbstError, Result};
use crate::space::ParameterSpace;

pub const CONSTRAINT_TOL: f64 = 1e-8;

type ConstraintFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type EmbedFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A parameterization u -> theta of the null manifold. `domain` describes
/// the u-space; its effective dimension is the hypothesis dimension.
#[derive(Clone)]
pub struct Embedding {
    pub domain: ParameterSpace,
    map: EmbedFn,
    /// Fixed point used when the embedded manifold is zero-dimensional.
    point: Option<Vec<f64>>,
}

impl Embedding {
    pub fn new<F>(domain: ParameterSpace, map: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Embedding { domain, map: Arc::new(map), point: None }
    }

    pub fn point(theta: Vec<f64>) -> Self {
        Embedding {
            domain: ParameterSpace::real_line("u"),
            map: Arc::new(|_| Vec::new()),
            point: Some(theta),
        }
    }

    pub fn dim(&self) -> usize {
        if self.point.is_some() {
            0
        } else {
            self.domain.effective_dim()
        }
    }

    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        match &self.point {
            Some(p) => p.clone(),
            None => (self.map)(u),
        }
    }
}

/// The null set Theta_H = { theta | g(theta) <= 0 and h(theta) = 0 },
/// with the number m of independent equalities declared by the caller.
#[derive(Clone)]
pub struct Hypothesis {
    name: String,
    equalities: Vec<ConstraintFn>,
    inequalities: Vec<ConstraintFn>,
    m: usize,
    embedding: Option<Embedding>,
}

impl Hypothesis {
    pub fn new(
        name: &str,
        equalities: Vec<ConstraintFn>,
        inequalities: Vec<ConstraintFn>,
        m: usize,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        if m > equalities.len() {
            return Err(FbstError::InvalidData(format!(
                "declared m = {m} exceeds the {} equality constraints",
                equalities.len()
            )));
        }
        Ok(Hypothesis {
            name: name.to_string(),
            equalities,
            inequalities,
            m,
            embedding,
        })
    }

    /// The trivial hypothesis H = Theta (no constraints, m = 0).
    pub fn unconstrained() -> Self {
        Hypothesis {
            name: "unconstrained".into(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            m: 0,
            embedding: None,
        }
    }

    /// Point hypothesis theta = value. On a simplex the last coordinate is
    /// redundant, so only the first K-1 coordinates count as equalities.
    pub fn point(space: &ParameterSpace, value: Vec<f64>) -> Result<Self> {
        space.check_dim(&value)?;
        if !space.contains(&value) {
            return Err(FbstError::OutsideSupport(format!(
                "point hypothesis {value:?} is outside the support"
            )));
        }
        let m = space.effective_dim();
        let mut equalities: Vec<ConstraintFn> = Vec::new();
        for i in 0..m {
            let c = value[i];
            equalities.push(Arc::new(move |t: &[f64]| t[i] - c));
        }
        Ok(Hypothesis {
            name: "point".into(),
            equalities,
            inequalities: Vec::new(),
            m,
            embedding: Some(Embedding::point(value)),
        })
    }

    /// Fix a subset of coordinates: theta_i = c_i for (i, c_i) pairs.
    pub fn fix_coordinates(space: &ParameterSpace, fixed: Vec<(usize, f64)>) -> Result<Self> {
        if fixed.is_empty() {
            return Ok(Hypothesis::unconstrained());
        }
        let d = space.ambient_dim();
        for (i, _) in &fixed {
            if *i >= d {
                return Err(FbstError::InvalidData(format!("coordinate {i} out of range")));
            }
        }
        if fixed.len() == space.effective_dim() || (space.is_simplex() && fixed.len() >= d - 1) {
            // fully pinned: reduce to a point hypothesis when possible
            if !space.is_simplex() && fixed.len() == d {
                let mut v = vec![0.0; d];
                for (i, c) in &fixed {
                    v[*i] = *c;
                }
                return Hypothesis::point(space, v);
            }
        }
        let m = fixed.len();
        let equalities: Vec<ConstraintFn> = fixed
            .iter()
            .map(|&(i, c)| {
                let f: ConstraintFn = Arc::new(move |t: &[f64]| t[i] - c);
                f
            })
            .collect();
        Ok(Hypothesis {
            name: "fix_coordinates".into(),
            equalities,
            inequalities: Vec::new(),
            m,
            embedding: None,
        })
    }

    /// Hardy-Weinberg equilibrium on the trinomial simplex:
    /// (p1, p2, p3) = (p^2, 2p(1-p), (1-p)^2) for some p in (0,1).
    pub fn hardy_weinberg(space: &ParameterSpace) -> Result<Self> {
        if !space.is_simplex() || space.ambient_dim() != 3 {
            return Err(FbstError::InvalidSpec(
                "hardy_weinberg needs a 3-category simplex model".into(),
            ));
        }
        let h: ConstraintFn = Arc::new(|t: &[f64]| t[0] - (1.0 - t[2].sqrt()).powi(2));
        let embedding = Embedding::new(ParameterSpace::unit_interval("p"), |u: &[f64]| {
            let p = u[0];
            vec![p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)]
        });
        Ok(Hypothesis {
            name: "hardy_weinberg".into(),
            equalities: vec![h],
            inequalities: Vec::new(),
            m: 1,
            embedding: Some(embedding),
        })
    }

    /// All coordinates equal. On a simplex this pins the uniform vector; on
    /// a product space it leaves the one-dimensional diagonal.
    pub fn equal_coordinates(space: &ParameterSpace) -> Result<Self> {
        let d = space.ambient_dim();
        if d < 2 {
            return Err(FbstError::InvalidSpec(
                "equal_means needs at least 2 coordinates".into(),
            ));
        }
        let mut equalities: Vec<ConstraintFn> = Vec::new();
        for i in 1..d {
            equalities.push(Arc::new(move |t: &[f64]| t[i] - t[0]));
        }
        let m = equalities.len();
        if space.is_simplex() {
            // all categories equal pins the uniform vector; m = K - 1
            // independent equalities in the effective coordinates
            Ok(Hypothesis {
                name: "equal_means".into(),
                equalities,
                inequalities: Vec::new(),
                m,
                embedding: Some(Embedding::point(vec![1.0 / d as f64; d])),
            })
        } else {
            let bounds0 = space.bounds()[0];
            let domain = ParameterSpace::new(vec!["u".into()], vec![bounds0], false)?;
            let embedding = Embedding::new(domain, move |u: &[f64]| vec![u[0]; d]);
            Ok(Hypothesis {
                name: "equal_means".into(),
                equalities,
                inequalities: Vec::new(),
                m,
                embedding: Some(embedding),
            })
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn equality_count(&self) -> usize {
        self.equalities.len()
    }

    pub fn inequality_count(&self) -> usize {
        self.inequalities.len()
    }

    /// Declared number of independent equality constraints.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.equalities.is_empty() && self.inequalities.is_empty()
    }

    /// Whether the hypothesis is sharp (at least one equality constraint).
    pub fn is_sharp(&self) -> bool {
        self.m >= 1
    }

    /// Hypothesis dimension h = t - m. Errors when the declared m exceeds
    /// the space dimension, or disagrees with the embedding dimension.
    pub fn h_dim(&self, space: &ParameterSpace) -> Result<usize> {
        let t = space.effective_dim();
        if self.m > t {
            return Err(FbstError::InvalidData(format!(
                "m = {} exceeds dim(Theta) = {t}",
                self.m
            )));
        }
        let h = t - self.m;
        if let Some(e) = &self.embedding {
            if e.dim() != h {
                return Err(FbstError::InvalidData(format!(
                    "embedding dimension {} disagrees with t - m = {h}",
                    e.dim()
                )));
            }
        }
        Ok(h)
    }

    /// Evaluate h and g at theta; feasible iff max|h_i| <= tol and
    /// max(g_j) <= tol.
    pub fn evaluate_constraints(
        &self,
        space: &ParameterSpace,
        theta: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, bool)> {
        space.check_dim(theta)?;
        let h: Vec<f64> = self.equalities.iter().map(|f| f(theta)).collect();
        let g: Vec<f64> = self.inequalities.iter().map(|f| f(theta)).collect();
        let feasible = h.iter().all(|v| v.abs() <= CONSTRAINT_TOL)
            && g.iter().all(|v| *v <= CONSTRAINT_TOL);
        Ok((h, g, feasible))
    }

    /// The same null set expressed in the image coordinates of a
    /// reparameterization: constraints compose with the inverse map and the
    /// embedding composes with the forward map.
    pub fn pushforward(&self, map: &crate::reference::Reparameterization) -> Hypothesis {
        let equalities: Vec<ConstraintFn> = self
            .equalities
            .iter()
            .map(|f| {
                let f = f.clone();
                let m = map.clone();
                let g: ConstraintFn = Arc::new(move |w: &[f64]| f(&m.inverse(w)));
                g
            })
            .collect();
        let inequalities: Vec<ConstraintFn> = self
            .inequalities
            .iter()
            .map(|f| {
                let f = f.clone();
                let m = map.clone();
                let g: ConstraintFn = Arc::new(move |w: &[f64]| f(&m.inverse(w)));
                g
            })
            .collect();
        let embedding = self.embedding.as_ref().map(|e| match &e.point {
            Some(p) => Embedding::point(map.forward(p)),
            None => {
                let inner = e.map.clone();
                let m = map.clone();
                Embedding {
                    domain: e.domain.clone(),
                    map: Arc::new(move |u: &[f64]| m.forward(&inner(u))),
                    point: None,
                }
            }
        });
        Hypothesis {
            name: format!("{}@{}", self.name, map.name()),
            equalities,
            inequalities,
            m: self.m,
            embedding,
        }
    }

    /// Residual norm max(|h_i|, max(g_j, 0)) at theta.
    pub fn residual(&self, theta: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for f in &self.equalities {
            r = r.max(f(theta).abs());
        }
        for f in &self.inequalities {
            r = r.max(f(theta).max(0.0));
        }
        r
    }
}

impl std::fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Hypothesis({}, m={}, eq={}, ineq={}, embedding={})",
            self.name,
            self.m,
            self.equalities.len(),
            self.inequalities.len(),
            self.embedding.is_some()
        )
    }
}

/// Result of an optimization step: maximizer, log of the supremum, and
/// convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct OptimumReport {
    pub maximizer: Vec<f64>,
    pub log_sup: f64,
    pub converged: bool,
    pub restarts: usize,
    pub evaluations: usize,
    pub constraint_residual: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_hypothesis_feasibility() {
        let space = ParameterSpace::unit_interval("theta");
        let h = Hypothesis::point(&space, vec![0.5]).unwrap();
        let (hv, _, feas) = h.evaluate_constraints(&space, &[0.5]).unwrap();
        assert!(feas);
        assert!(hv[0].abs() < 1e-15);
        let (hv, _, feas) = h.evaluate_constraints(&space, &[0.6]).unwrap();
        assert!(!feas);
        assert!((hv[0] - 0.1).abs() < 1e-12);
        assert_eq!(h.h_dim(&space).unwrap(), 0);
    }

    #[test]
    fn hardy_weinberg_constraint_and_embedding() {
        let space = ParameterSpace::simplex(3);
        let h = Hypothesis::hardy_weinberg(&space).unwrap();
        let (hv, _, feas) = h
            .evaluate_constraints(&space, &[0.25, 0.5, 0.25])
            .unwrap();
        assert!(feas, "h = {hv:?}");
        assert!(hv[0].abs() < 1e-12);
        assert_eq!(h.h_dim(&space).unwrap(), 1);
        // embedded points satisfy the constraint
        for i in 1..20 {
            let p = i as f64 / 20.0;
            let theta = h.embedding().unwrap().embed(&[p]);
            assert!(h.residual(&theta) < 1e-8, "p={p}");
            assert!(space.contains(&theta));
        }
    }

    #[test]
    fn point_off_support_rejected() {
        let space = ParameterSpace::unit_interval("theta");
        assert!(Hypothesis::point(&space, vec![1.5]).is_err());
    }

    #[test]
    fn m_exceeding_dimension_rejected() {
        let space = ParameterSpace::unit_interval("theta");
        let h = Hypothesis::new(
            "bad",
            vec![
                Arc::new(|t: &[f64]| t[0] - 0.5) as ConstraintFn,
                Arc::new(|t: &[f64]| t[0] - 0.25) as ConstraintFn,
            ],
            Vec::new(),
            2,
            None,
        )
        .unwrap();
        assert!(h.h_dim(&space).is_err());
    }
}
