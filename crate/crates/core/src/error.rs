use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CcaError {
    /// Inputs violate a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A numerical routine failed to produce a finite result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Filesystem problems while writing results.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CcaError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        CcaError::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        CcaError::Numerical(msg.into())
    }
}

impl From<std::io::Error> for CcaError {
    fn from(err: std::io::Error) -> Self {
        CcaError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CcaError>;
