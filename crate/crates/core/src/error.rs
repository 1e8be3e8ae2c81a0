use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A corpus-level computation received no words.
    #[error("empty-corpus")]
    EmptyCorpus,

    #[error("empty-sequence")]
    EmptySequence,

    #[error("label-out-of-vocab: {0:?}")]
    LabelOutOfVocab(String),

    #[error("position mismatch: expected {expected}, got {actual}")]
    PositionMismatch { expected: usize, actual: usize },

    #[error("distribution not normalized: mass {mass}")]
    NotNormalized { mass: f64 },

    #[error("position {position} out of range for sequence of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("token at position {position} is {found:?}, expected mask token {mask:?}")]
    NotMaskToken {
        position: usize,
        found: String,
        mask: String,
    },

    #[error("scorer error: {0}")]
    Scorer(String),

    #[error("empty grade bucket: {0}")]
    EmptyBucket(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
