use std::path::PathBuf;

use thiserror::Error;
use zeroshot_core::{AdaptiveError, AembError, EngineError, ManifestError, MatrixError, Violation};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const CONTRACT: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Aemb { path: PathBuf, source: AembError },
    #[error("{}: {source}", path.display())]
    Manifest {
        path: PathBuf,
        source: ManifestError,
    },
    #[error("{}: {source}", path.display())]
    Matrix { path: PathBuf, source: MatrixError },
    #[error("{}: unknown keys {}", path.display(), keys.join(", "))]
    UnknownKeys { path: PathBuf, keys: Vec<String> },
    #[error("bundle has {} violation(s)", .0.len())]
    Violations(Vec<Violation>),
    #[error("{0}")]
    Contract(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Adaptive(#[from] AdaptiveError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Json { .. } | CliError::Aemb { .. } => exit::IO,
            CliError::Manifest { .. }
            | CliError::Matrix { .. }
            | CliError::UnknownKeys { .. }
            | CliError::Violations(_) => exit::VALIDATION,
            CliError::Contract(_) | CliError::Engine(_) | CliError::Adaptive(_) => exit::CONTRACT,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        CliError::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
