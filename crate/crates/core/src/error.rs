use thiserror::Error;

/// Errors raised by the spectral lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("grid size {m} is invalid: need an even point count of at least 8")]
    InvalidGrid { m: usize },

    #[error("size mismatch: expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical instability at t = {t}")]
    Instability { t: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("argument outside the admissible domain: {0}")]
    Domain(String),

    #[error("trajectory has no sample near t = {t}")]
    MissingSample { t: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;
