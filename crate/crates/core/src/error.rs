use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed input at a given (1-based) line.
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected} labels (incl. blank), found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid label index {index} (alphabet has {size} entries)")]
    InvalidLabel { index: usize, size: usize },

    #[error("character {0:?} is not in the alphabet")]
    UnknownChar(char),

    #[error("frame {frame} is not normalized: logsumexp = {logsumexp}")]
    Normalization { frame: usize, logsumexp: f64 },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("instance too large: {paths} paths exceeds the limit of {limit}")]
    InstanceTooLarge { paths: f64, limit: f64 },

    #[error("emission log out of order: frame {found} follows frame {previous}")]
    OutOfOrder { previous: usize, found: usize },

    #[error("committed prefix revised at emission frame {frame}")]
    CommitViolation { frame: usize },
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
