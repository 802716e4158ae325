use gnnlab_engine::EngineError;
use gnnlab_graph::GraphError;
use gnnlab_samplers::SamplerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    BadConfig(String),

    #[error(
        "drew {attempts} consecutive subgraphs without a train node; raise the \
         subgraph node budget or rebalance the splits"
    )]
    TrainlessSubgraph { attempts: usize },

    #[error("split '{0}' has no nodes")]
    EmptySplit(&'static str),

    #[error("diagnostic invariant failed: {0}")]
    Diagnostic(String),

    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Sampler(#[from] SamplerError),

    #[error(transparent)]
    Graph(#[from] GraphError),
}
