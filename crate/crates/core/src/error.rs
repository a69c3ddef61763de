use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("block index {index} out of range (system has {available} blocks)")]
    BlockOutOfRange { index: usize, available: usize },

    #[error("quadrature exactness {available} is below the required {required}")]
    InsufficientExactness { required: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("body has no finite circumradius")]
    MissingCircumradius,

    #[error("sample count must be positive")]
    ZeroSamples,

    #[error("subspace intersection is empty")]
    EmptyIntersection,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
