use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input files.
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] sqa_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Table { path: PathBuf, message: String },

    /// Some sweep points failed; the rest were written.
    #[error("{failed} of {total} parameter points failed (first: {first})")]
    Partial {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Table { .. } => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
