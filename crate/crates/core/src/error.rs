use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time {t} lies outside the schedule window [{start}, {end}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },

    #[error("integration failed: norm drift {drift:e} exceeds tolerance {tolerance:e}")]
    IntegrationFailure { drift: f64, tolerance: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;
