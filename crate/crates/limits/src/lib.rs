//! Graph-limit diagnostics: canonical ball signatures, neighborhood
//! censuses with total-variation comparisons, local distances, random graph
//! generators, limit references, and almost-local estimators.

mod census;
mod dloc;
mod error;
mod estimators;
mod generators;
mod reference;
mod signature;

pub use census::{
    census_tsv, convergence_csv, neighborhood_census, tv_distance, CensusDistribution,
    ConvergenceRow,
};
pub use dloc::{d_loc, DLocResult};
pub use error::LimitsError;
pub use estimators::{
    degree_normalized_estimate, disjoint_ball_probability, negsample_estimate,
    uniform_integrability_profile, DisjointBallReport, NegSampleEstimate,
    NoiseDistribution,
};
pub use generators::{gen_config_model, gen_erdos_renyi, gen_pref_attachment};
pub use reference::{poisson_depth1_reference, sample_gw_reference};
pub use signature::{
    ball_signature, quantize_feature, BallSignature, SigKey, DEFAULT_FEATURE_BITS,
    MAX_EXACT_NODES,
};
