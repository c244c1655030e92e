use thiserror::Error;

/// Errors surfaced by the library. Validation problems (bad hyperparameters,
/// malformed specs, dimension mismatches) are distinguished from numerical
/// failures (non-convergence, degenerate chains) so the CLI can map them to
/// distinct exit codes.
#[derive(Debug, Error)]
pub enum FbstError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("family mismatch: prior is {prior}, data is {data}")]
    FamilyMismatch { prior: String, data: String },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("point outside parameter support: {0}")]
    OutsideSupport(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("hypothesis is infeasible or empty: {0}")]
    InfeasibleHypothesis(String),

    #[error("optimizer failed to converge: {0}")]
    OptimizerFailure(String),

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

impl FbstError {
    /// CLI exit code class: 2 for validation failures, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            FbstError::OptimizerFailure(_) | FbstError::SamplerFailure(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, FbstError>;
