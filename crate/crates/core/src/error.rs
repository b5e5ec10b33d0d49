use thiserror::Error;

/// Errors raised by cube operations, quadrature and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected n = {expected}, got n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Quadrature or iteration did not reach the requested accuracy.
    #[error("numeric failure in {context}: achieved error estimate {estimate:e}")]
    NumericFailure { context: String, estimate: f64 },

    #[error("construction failure: {0}")]
    ConstructionFailure(String),

    #[error("malformed serialized data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numeric(context: impl Into<String>, estimate: f64) -> Self {
        Error::NumericFailure {
            context: context.into(),
            estimate,
        }
    }
}
