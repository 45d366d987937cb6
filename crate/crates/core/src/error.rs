use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate record id {id} at line {line}")]
    DuplicateId { id: u64, line: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("missing artifact {path}: run `{command}` first")]
    MissingArtifact { path: PathBuf, command: &'static str },

    #[error("artifact {path} was built under config {found}, current is {expected}: run `{command}` first")]
    StaleArtifact {
        path: PathBuf,
        command: &'static str,
        found: String,
        expected: String,
    },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("adapter: {0}")]
    Remote(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable name of the variant, for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::Empty(_) => "empty",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::UnknownMode(_) => "unknown_mode",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::StaleArtifact { .. } => "stale_artifact",
            Error::Checkpoint(_) => "checkpoint",
            Error::Remote(_) => "remote",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
