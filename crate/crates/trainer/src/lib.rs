//! Training loops, stopping diagnostics and benchmark datasets.
//!
//! The runner trains a model either on the source graph or on periodically
//! redrawn BFS subgraphs, with importance-weighted minibatch gradients from
//! the sampler and engine crates. Diagnostics relate finished runs to the
//! full-graph objective: the full-batch gradient norm of trained parameters
//! and the growth of stopping times as the threshold shrinks.

mod config;
mod datasets;
mod diagnostics;
mod error;
mod metrics;
mod runner;

pub use config::{LossKind, Optimizer, TrainConfig};
pub use datasets::{
    citeseer_like, cora_like, synthetic_citation, toy_two_class_graph, CitationParams,
};
pub use diagnostics::{
    epsilon_scaling_report, limit_gradient_check, EpsilonScalingReport, SeedScaling,
};
pub use error::TrainError;
pub use metrics::{metrics_csv, EpochRow, RunMetrics, StopReason, METRICS_CSV_HEADER};
pub use runner::{evaluate, train_full, train_on_subgraphs, EvalReport, TrainOutcome};
