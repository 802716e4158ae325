//! Declarative sampler configuration shared by the trainer and the CLI.

use serde::{Deserialize, Serialize};

/// How minibatch nodes are drawn from the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSampler {
    /// Uniform without replacement; all importance weights are 1.
    Uniform,
    /// Inclusion probability proportional to degree; the returned weight of a
    /// drawn node feeds the `1/weight` correction of the gradient estimator.
    DegreeWeighted,
}

/// How the per-batch computational graph is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CompSampler {
    /// Entire layered neighborhood, no sampling.
    Full,
    /// Uniform fixed-size neighbor subsets, `fanouts[l]` children at depth l.
    Sage { fanouts: Vec<usize> },
    /// Layerwise importance sampling by squared normalized adjacency,
    /// `layer_sizes[l]` nodes kept at depth l.
    Fastgcn { layer_sizes: Vec<usize> },
    /// Decoupled per-seed subgraphs; shared nodes become independent copies.
    Shadow { depth: usize, inner: ShadowInner },
}

/// How each per-seed subgraph is extracted under the decoupled sampler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShadowInner {
    Full,
    Sage { fanouts: Vec<usize> },
    Fastgcn { layer_sizes: Vec<usize> },
}

/// Where the graph each training phase works on comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubgraphSampler {
    /// Train on the source graph itself.
    WholeGraph,
    /// Train on truncated-BFS subgraphs of `max_nodes` nodes.
    Bfs { max_nodes: usize },
}

/// The full sampling configuration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub node_sampler: NodeSampler,
    pub batch_size: usize,
    pub comp_sampler: CompSampler,
    pub subgraph_sampler: SubgraphSampler,
    /// Epochs between subgraph redraws.
    pub resample_interval: usize,
}

impl SamplerSpec {
    /// Full-neighborhood sampling on the whole graph; the configuration of a
    /// plain minibatch baseline.
    pub fn whole_graph(batch_size: usize) -> Self {
        SamplerSpec {
            node_sampler: NodeSampler::Uniform,
            batch_size,
            comp_sampler: CompSampler::Full,
            subgraph_sampler: SubgraphSampler::WholeGraph,
            resample_interval: 1,
        }
    }
}
