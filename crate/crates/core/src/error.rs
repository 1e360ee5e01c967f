use thiserror::Error;

/// Errors raised by oracles, planners and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("point left the kernel domain: {0}")]
    DomainExit(String),

    #[error("root-find failed: {0}")]
    RootFind(String),

    #[error("subproblem solve failed: {0}")]
    Prox(String),

    #[error("f is affine (both relative moduli are zero)")]
    AffineSmooth,

    #[error("oracle verification failed: {0}")]
    Verification(String),

    #[error("planning failed: {0}")]
    Plan(#[from] crate::planner::PlanError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown instance '{0}'")]
    UnknownInstance(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("rate fit: {0}")]
    Rates(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
