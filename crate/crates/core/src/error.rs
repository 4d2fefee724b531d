use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure in {op}: achieved error estimate {estimate:e}")]
    NumericalFailure { op: String, estimate: f64 },
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}
