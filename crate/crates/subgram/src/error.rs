//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty subword sequence")]
    EmptySequence,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tagged mode requested but segmentation carries no tags")]
    MissingTags,

    #[error("composition trace has no retained intermediates")]
    MissingIntermediates,

    #[error("invalid configuration label `{label}`: {reason}")]
    InvalidLabel { label: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate ranking")]
    DegenerateRanking,

    #[error("missing results for {0:?}")]
    MissingCells(Vec<(String, String)>),

    #[error("non-finite value detected in {0}")]
    NumericFailure(String),

    #[error("parse error in {path}: {reason}")]
    ParseFile { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::ParseFile {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidLabel { .. } | Error::InvalidConfig(_) => 1,
            Error::NumericFailure(_) => 3,
            _ => 2,
        }
    }
}
