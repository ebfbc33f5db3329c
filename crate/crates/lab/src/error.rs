use std::path::PathBuf;

use css_core::CoreError;
use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// A scan row disagreed with its prediction.
    pub const DISAGREE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const BLOWUP: i32 = 3;
    /// Evolution aborted, or a minimizer did not converge.
    pub const ABORTED: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed snapshot: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl LabError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) | LabError::Config { .. } => exit::USAGE,
            LabError::Io { .. } | LabError::Snapshot { .. } => exit::IO,
            LabError::Core(CoreError::InvalidParameter { .. } | CoreError::InvalidGrid(_)) => exit::USAGE,
            LabError::Core(_) => exit::ABORTED,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
