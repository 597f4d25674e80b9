use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero pivot encountered at row {row}")]
    ZeroPivot { row: usize },

    #[error("explicit step is unbounded (operator has no positive diagonal magnitude)")]
    UnboundedStep,

    #[error("PSOR did not converge after {iterations} iterations (last update {residual:e})")]
    PsorNotConverged { iterations: usize, residual: f64 },

    #[error("obstacle is not monotone; Brennan-Schwartz requires a monotone payoff")]
    NonMonotoneObstacle,

    #[error("control iteration did not settle after {iterations} iterations")]
    ControlNotConverged { iterations: usize },

    #[error("scan window too small: stability region touches the {side} boundary")]
    WindowTooSmall { side: &'static str },

    #[error("non-central chi-square series did not converge")]
    SeriesNotConverged,

    #[error("quantile inversion failed for p = {p}")]
    QuantileInversion { p: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
