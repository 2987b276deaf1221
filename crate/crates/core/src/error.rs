use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("integration accuracy: {0}")]
    Accuracy(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Input-side failures map to a validation exit status; everything else
    /// is a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidSize(_) | Error::Domain(_) | Error::Validation(_) | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
