//! Hand-written GNN training engine.
//!
//! Models are stacks of GCN, GraphSAGE or GIN layers evaluated either over a
//! sampled computational graph ([`forward`]) or over the whole graph
//! ([`full_graph_forward`]). Gradients come from an explicit reverse pass
//! ([`backward`]) validated coordinate-by-coordinate against central finite
//! differences ([`finite_diff_check`]). Every reduction runs in a fixed
//! order, so identical inputs give bitwise-identical outputs.

mod backward;
mod error;
mod forward;
mod gradcheck;
mod loss;
mod optim;
mod params;

pub use backward::{backward, backward_from_outputs};
pub use error::EngineError;
pub use forward::{forward, full_graph_forward, ForwardResult};
pub use gradcheck::{
    finite_diff_check, finite_diff_check_record, GradCheckReport, WorstCoordinate,
    FINITE_DIFF_PARAM_LIMIT,
};
pub use loss::{negsample_loss, nll_loss, readout_mean, sigmoid, softplus, LossTarget};
pub use optim::{sgd_step, AdamState};
pub use params::{
    estimate_gradient, load_checkpoint, save_checkpoint, Architecture, GradientRecord,
    LayerParams, ModelParams, OutputMap,
};
