use thiserror::Error;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("no train-mask nodes to sample from")]
    NoTrainNodes,

    #[error("degree weighting needs at least one train node with positive degree")]
    AllWeightsZero,

    #[error("batch size must be positive")]
    EmptyBatch,

    #[error("{0}")]
    Graph(#[from] gnnlab_graph::GraphError),

    #[error("computational graph depth must be positive")]
    ZeroDepth,

    #[error("{what} must list one entry per layer (depth {depth}, got {got})")]
    LayerCountMismatch {
        what: &'static str,
        depth: usize,
        got: usize,
    },
}
