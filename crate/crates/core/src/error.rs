use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or config field failed validation. `field` names the offender.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("environment stepped after episode end; call reset first")]
    EpisodeFinished,

    #[error("environment stepped before reset")]
    NotReset,

    #[error("non-finite value detected: {0}")]
    NonFinite(String),

    #[error("refusing to overwrite existing artifact {0} (pass --overwrite)")]
    WouldOverwrite(PathBuf),

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("unknown policy `{0}` (expected lara, fra, rra or oracle)")]
    UnknownPolicy(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for this error: 1 usage, 2 validation, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownPolicy(_) => 1,
            Error::Validation { .. } | Error::Parse { .. } => 2,
            _ => 3,
        }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
