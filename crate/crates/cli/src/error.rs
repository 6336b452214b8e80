use std::path::PathBuf;

use qroc_core::QrocError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] QrocError),

    /// Inconsistent or missing options, unknown covariate names.
    #[error("{0}")]
    Validation(String),

    #[error("cannot parse config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit codes. Usage errors from argument parsing exit with 2.
pub mod exit {
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const SOLVER: i32 = 5;
    pub const INFERENCE: i32 = 6;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e {
                QrocError::Parse { .. } | QrocError::Csv(_) => exit::PARSE,
                QrocError::Domain(_) | QrocError::Shape(_) | QrocError::Invalid(_) => exit::VALIDATION,
                QrocError::Singular { .. } | QrocError::ExtremeQuantile { .. } | QrocError::NoConvergence(_) => {
                    exit::SOLVER
                }
                QrocError::Inference(_) => exit::INFERENCE,
                QrocError::Io(_) => exit::OTHER,
            },
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Config { .. } => exit::PARSE,
            CliError::Write { .. } | CliError::Read { .. } => exit::OTHER,
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
