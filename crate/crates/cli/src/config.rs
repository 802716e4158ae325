//! Run configuration: one JSON file with a schema version plus one section
//! per concern. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use gnnlab_engine::{Architecture, OutputMap};
use gnnlab_trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<CensusSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradcheck: Option<GradcheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// 20-node two-community fixture.
    Toy,
    /// Synthetic benchmark matching the published Cora statistics.
    CoraLike { seed: u64 },
    /// Synthetic benchmark matching the published CiteSeer statistics.
    CiteseerLike { seed: u64 },
    /// Fully parameterized synthetic citation graph.
    SyntheticCitation {
        seed: u64,
        nodes: usize,
        classes: usize,
        feature_dim: usize,
        active_features: usize,
        intra_edge_prob: f64,
        own_topic_prob: f64,
        #[serde(default)]
        label_noise: f64,
        train_per_class: usize,
        val: usize,
        test: usize,
    },
    /// The four dataset files (edges/features/labels/splits) under a
    /// directory.
    Files { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub arch: Architecture,
    /// Embedding width after each message-passing layer.
    pub dims: Vec<usize>,
    /// Dense classifier width; defaults to the dataset's class count when
    /// the output map is log_softmax, absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_classes: Option<usize>,
    #[serde(default = "default_output")]
    pub output: OutputMap,
    /// Seed of the Glorot initialization, independent of the training seed.
    #[serde(default)]
    pub init_seed: u64,
}

fn default_output() -> OutputMap {
    OutputMap::LogSoftmax
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Sparse G(n, lambda/n).
    ErdosRenyi { lambda: f64 },
    /// Configuration model; the degree pattern is cycled up to each size.
    ConfigModel { degree_pattern: Vec<usize> },
    /// Preferential attachment, `m` edges per arriving node.
    PrefAttachment { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// Analytic depth-1 Poisson(lambda) limit, tail folded at max_deg.
    Poisson { lambda: f64, max_deg: usize },
    /// Monte-Carlo Galton-Watson limit at the census radius.
    GaltonWatson { lambda: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusSpec {
    /// When present, sweeps generated graphs over `sizes` x `seeds`;
    /// otherwise the census runs once on the dataset section's graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_census_seeds")]
    pub seeds: Vec<u64>,
    pub radius: usize,
    #[serde(default)]
    pub attributed: bool,
    /// Above this node count the census samples this many roots.
    #[serde(default = "default_sample_cap")]
    pub sample_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
}

fn default_census_seeds() -> Vec<u64> {
    vec![0]
}

fn default_sample_cap() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSpec {
    /// Nodes of the random check instance.
    #[serde(default = "default_gc_nodes")]
    pub nodes: usize,
    #[serde(default = "default_gc_step")]
    pub step: f64,
    /// Maximum relative error accepted on the random instances.
    #[serde(default = "default_gc_tolerance")]
    pub tolerance: f64,
    /// Also check a relu-free linear model against this tighter bound.
    #[serde(default = "default_gc_linear_tolerance")]
    pub linear_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Test hook: perturb one analytic gradient coordinate so the check
    /// must fail.
    #[serde(default)]
    pub corrupt_gradient: bool,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        GradcheckSpec {
            nodes: default_gc_nodes(),
            step: default_gc_step(),
            tolerance: default_gc_tolerance(),
            linear_tolerance: default_gc_linear_tolerance(),
            seed: 0,
            corrupt_gradient: false,
        }
    }
}

fn default_gc_nodes() -> usize {
    20
}

fn default_gc_step() -> f64 {
    1e-5
}

fn default_gc_tolerance() -> f64 {
    1e-4
}

fn default_gc_linear_tolerance() -> f64 {
    1e-7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    /// Training seeds; the report carries per-seed results and medians.
    pub seeds: Vec<u64>,
}

/// Reads and validates a config file. Everything that can go wrong here is
/// a configuration error (exit 2).
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "schema version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

/// Applies the global flag overrides, returning the effective config the
/// manifest echoes.
pub fn apply_overrides(
    mut cfg: RunConfig,
    seed: Option<u64>,
    deterministic: bool,
) -> RunConfig {
    if let Some(s) = seed {
        if let Some(train) = cfg.train.as_mut() {
            train.seed = s;
        }
        if let Some(gc) = cfg.gradcheck.as_mut() {
            gc.seed = s;
        }
    }
    if deterministic {
        if let Some(train) = cfg.train.as_mut() {
            train.deterministic = true;
        }
    }
    cfg
}

pub fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("config is missing the `{name}` section")))
}
