use gnnlab_samplers::{SamplerSpec, SubgraphSampler};
use serde::{Deserialize, Serialize};

use crate::error::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Training objective. Negative sampling pairs each batch node with a
/// uniform neighbor and `negatives` uniform non-neighbors per pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LossKind {
    Nll,
    NegSample { negatives: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub optimizer: Optimizer,
    /// Stop once the EMA of minibatch gradient norms falls to this value.
    /// 0 disables early stopping; infinity stops before the first epoch.
    pub epsilon: f64,
    pub max_epochs: usize,
    pub sampler: SamplerSpec,
    pub loss: LossKind,
    pub seed: u64,
    /// Zeroes wall-clock columns so metrics are byte-reproducible.
    pub deterministic: bool,
    /// Consecutive redraws allowed when a subgraph has no train nodes.
    pub max_redraws: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(TrainError::BadConfig(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        if self.epsilon < 0.0 || self.epsilon.is_nan() {
            return Err(TrainError::BadConfig(format!(
                "stop threshold must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.sampler.batch_size == 0 {
            return Err(TrainError::BadConfig("batch size must be positive".into()));
        }
        if self.sampler.resample_interval == 0 {
            return Err(TrainError::BadConfig(
                "resample interval must be at least 1".into(),
            ));
        }
        if let SubgraphSampler::Bfs { max_nodes } = self.sampler.subgraph_sampler {
            if max_nodes == 0 {
                return Err(TrainError::BadConfig(
                    "subgraph node budget must be positive".into(),
                ));
            }
        }
        if let LossKind::NegSample { negatives } = self.loss {
            if negatives == 0 {
                return Err(TrainError::BadConfig(
                    "negative sampling needs at least one negative per pair".into(),
                ));
            }
        }
        if self.max_redraws == 0 {
            return Err(TrainError::BadConfig(
                "at least one subgraph draw attempt is required".into(),
            ));
        }
        Ok(())
    }
}
