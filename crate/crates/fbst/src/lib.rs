//! Computation of e-values and the Full Bayesian Significance Test (FBST)
//! for sharp hypotheses in parametric Bayesian models.
//!
//! The pipeline has two numerical steps over a surprise function
//! s(theta) = posterior / reference:
//!
//! 1. optimization: find the supremum of s over the null set and over the
//!    whole parameter space;
//! 2. integration: compute the posterior mass of the sublevel set
//!    {s <= s*}, which is the e-value ev(H).
//!
//! On top of that sit the chi-square confidence transform, the standardized
//! e-value, the Reject / Neutral / Accept decision rule, and simulation
//! harnesses for threshold calibration, consistency, and invariance checks.

pub mod asymptotics;
pub mod error;
pub mod hypothesis;
pub mod integrate;
pub mod model;
pub mod optimize;
pub mod pipeline;
pub mod quadrature;
pub mod reference;
pub mod space;
pub mod special;
pub mod spec;

pub use error::{FbstError, Result};
pub use hypothesis::{Hypothesis, OptimumReport};
pub use model::{conjugate_posterior_update, simulate_data, Conjugate, DataSet, Family, PosteriorModel, SuffStats};
pub use reference::{pushforward, ReferenceDensity, ReferenceKind, Reparameterization, SurpriseFunction};
pub use space::{Bound, ParameterSpace};
