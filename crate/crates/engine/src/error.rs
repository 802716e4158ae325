use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("computational graph has depth {graph} but the model has {model} layers")]
    DepthMismatch { graph: usize, model: usize },

    #[error("seed {seed} (node {node}) has no label")]
    MissingLabel { seed: usize, node: usize },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: i64, classes: usize },

    #[error("output rows are not normalized log-probabilities (row {row} sums to {sum:.6} in probability space)")]
    NotLogProbs { row: usize, sum: f64 },

    #[error("loss does not fit the model output: {0}")]
    LossMismatch(String),

    #[error("model has {count} parameters, over the finite-difference limit of {limit}")]
    TooManyParams { count: usize, limit: usize },

    #[error("invalid estimator input: {0}")]
    BadEstimate(String),

    #[error("checkpoint i/o failed for {path}: {source}")]
    CheckpointIo {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint {path} is malformed: {msg}")]
    CheckpointFormat { path: String, msg: String },
}
