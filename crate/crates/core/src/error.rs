use thiserror::Error;

/// Errors raised by the estimation, control and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-monotonic timestamp: {t} is not after {last}")]
    NonMonotonic { t: f64, last: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window too short: {0} samples, need at least 2")]
    WindowTooShort(usize),
    #[error("mode with zero frequency; the offset block carries the DC term")]
    ZeroFrequency,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at horizon step {0}")]
    NonFinite(usize),
    #[error("observer not initialized")]
    Uninitialized,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
