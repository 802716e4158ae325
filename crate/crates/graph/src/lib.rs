//! Graph representation and ingestion for the sampling lab.
//!
//! Provides immutable CSR attributed graphs, rooted BFS balls, truncated-BFS
//! subgraph draws, symmetric adjacency normalization and the dataset file
//! formats shared by the other crates.

mod ball;
mod error;
mod features;
mod graph;
mod io;
mod subgraph;

pub use ball::{bfs_ball, RootedBall};
pub use error::GraphError;
pub use features::FeatureMatrix;
pub use graph::{AttributedGraph, Split};
pub use io::{
    load_graph, read_edge_list, remap_contiguous, write_dataset, DatasetPaths,
};
pub use subgraph::{bfs_subgraph, Subgraph};
