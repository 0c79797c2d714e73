use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("linear solve residual {residual:e} exceeds tolerance {tol:e}")]
    SolveTolerance { residual: f64, tol: f64 },

    #[error("trigger time {t} does not advance past last triggering instant {t_k}")]
    TimeRegression { t: f64, t_k: f64 },

    #[error("initial condition is not compatible with the clamp at x = 0: {0}")]
    IncompatibleInitialCondition(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("non-finite state detected at step {step}")]
    NonFinite { step: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("attached certificate is invalid: {}", .0.join("; "))]
    InvalidCertificate(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
