use gnnlab_graph::GraphError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("census radii differ: {left} vs {right}")]
    RadiusMismatch { left: usize, right: usize },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("graph has no edges")]
    EdgelessGraph,

    #[error("degree sequence sums to {sum}, which is odd")]
    OddStubSum { sum: usize },

    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error(transparent)]
    Graph(#[from] GraphError),
}
