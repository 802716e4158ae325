//! Node, computational-graph and subgraph samplers.
//!
//! The three sampling stages of a run live here: drawing minibatch nodes
//! from the training set, extracting the layered computational graph each
//! batch propagates through, and the declarative [`SamplerSpec`] tying them
//! together (subgraph draws themselves live in the graph crate).

mod compgraph;
mod error;
mod minibatch;
mod spec;
mod window;

pub use compgraph::{
    fastgcn_computational_graph, fastgcn_importance, full_computational_graph,
    full_computational_graph_batch, sage_computational_graph, shadow_extract, AggEdge,
    Aggregation, ComputationalGraph,
};
pub use error::SamplerError;
pub use minibatch::{sample_minibatch, systematic_inclusion_sample, Minibatch};
pub use spec::{CompSampler, NodeSampler, SamplerSpec, ShadowInner, SubgraphSampler};
pub use window::{validate_batch_window, BatchWindowReport};
