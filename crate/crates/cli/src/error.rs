use std::path::PathBuf;

use stylus_core::TrapError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Schema(String),

    #[error("{0}")]
    Physics(TrapError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<TrapError> for CliError {
    fn from(e: TrapError) -> Self {
        match e {
            TrapError::InvalidInput(_) | TrapError::InvalidGeometry(_) | TrapError::UnknownPreset(_) => CliError::Schema(e.to_string()),
            other => CliError::Physics(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
