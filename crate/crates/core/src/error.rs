use std::path::PathBuf;

use crate::codec::CaptionParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("class `{0}` is not in the vocabulary")]
    UnknownClass(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid scene `{id}`: {violations:?}")]
    InvalidScene {
        id: String,
        violations: Vec<crate::scene::Violation>,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(transparent)]
    CaptionParse(#[from] CaptionParseError),

    #[error("semantic error is undefined for an all-zero ground-truth vector")]
    EmptyTruth,

    #[error("gain is undefined for a zero-size source")]
    ZeroSource,

    #[error("cumulative average of an empty series")]
    EmptySeries,

    #[error("dataset contains no images")]
    EmptyDataset,

    #[error("no codec configurations to select from")]
    EmptyConfigSet,

    #[error("duplicate codec configuration name `{0}`")]
    DuplicateConfigName(String),

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("payload kind mismatch: expected {expected}, got {actual}")]
    PayloadKind {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("annotation {annotation} references unknown category id {category}")]
    UnknownCategory { annotation: u64, category: u64 },

    #[error("annotation {annotation} references unknown image id {image}")]
    UnknownImage { annotation: u64, image: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("plot rendering failed for {}: {message}", path.display())]
    Plot { path: PathBuf, message: String },

    #[error("bridge error {code}: {message}")]
    Bridge { code: u16, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
