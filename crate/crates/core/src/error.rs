use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symbol is not elliptic: {0}")]
    NotElliptic(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("integral diverges at the origin: {0}")]
    DivergentAtOrigin(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("trace kernel not calibrated for n={n}, k={k}")]
    Uncalibrated { n: usize, k: usize },
    #[error("point outside the grid domain: {0}")]
    OutsideGrid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
