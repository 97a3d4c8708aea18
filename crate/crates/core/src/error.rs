use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{source}")]
    RawIo {
        #[from]
        source: io::Error,
    },

    /// A malformed input line. `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("query `{0}` is judged in qrels but missing from the query set")]
    MissingQuery(String),

    #[error("document `{0}` is judged in qrels but missing from the collection")]
    MissingDocument(String),

    #[error("no weight record for document `{0}` (missing-weight policy is strict)")]
    MissingWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("query has no usable terms")]
    EmptyQuery,

    #[error("index has no scorable documents")]
    EmptyIndex,

    #[error("sequential dependence queries require a positional index")]
    NotPositional,

    #[error("checksum mismatch for {0}")]
    Checksum(String),

    #[error("unsupported index format: {0}")]
    Format(String),

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("runs cover different query sets ({0})")]
    QuerySetMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl ToString, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
