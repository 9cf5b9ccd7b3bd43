use std::path::PathBuf;

use nlskdv_core::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lab(#[from] LabError),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for invalid input, 3 for numerical instability.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(LabError::Instability { .. }) => 3,
            CliError::Lab(_) | CliError::Validation(_) | CliError::Json(_) => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
