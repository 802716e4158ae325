use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while building or loading graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed line in one of the dataset files, with its 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("node id {id} out of range for {node_count} nodes")]
    NodeOutOfRange { id: usize, node_count: usize },

    #[error("invalid graph: {0}")]
    Validation(String),
}
