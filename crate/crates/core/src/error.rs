use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("truncated payload at byte offset {offset}: expected {expected} more bytes")]
    Truncated { offset: u64, expected: u64 },

    #[error("malformed PLY: {0}")]
    Format(String),

    #[error("missing PLY vertex property `{0}`")]
    MissingProperty(String),

    #[error("unsupported PLY encoding `{0}` (only binary_little_endian 1.0 is supported)")]
    UnsupportedEncoding(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "graph would hold {edges} edges, above the cap of {cap}; choose a smaller tau or raise the cap"
    )]
    Capacity { edges: u64, cap: u64 },

    #[error("shape mismatch: expected {expected} rows, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("selection is empty (keep fraction {k} of {n} primitives rounds to zero)")]
    EmptySelection { k: f64, n: usize },

    #[error("index {index} out of bounds for field of {len} primitives")]
    OutOfBounds { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
