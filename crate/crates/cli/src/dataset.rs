//! Dataset resolution and checksumming.

use gnnlab_graph::{load_graph, AttributedGraph, DatasetPaths, Split};
use gnnlab_trainer::{citeseer_like, cora_like, synthetic_citation, toy_two_class_graph,
    CitationParams};
use sha2::{Digest, Sha256};

use crate::config::DatasetSpec;
use crate::error::CliError;

pub fn load_dataset(spec: &DatasetSpec) -> Result<AttributedGraph, CliError> {
    match spec {
        DatasetSpec::Toy => Ok(toy_two_class_graph()),
        DatasetSpec::CoraLike { seed } => Ok(cora_like(*seed)),
        DatasetSpec::CiteseerLike { seed } => Ok(citeseer_like(*seed)),
        DatasetSpec::SyntheticCitation {
            seed,
            nodes,
            classes,
            feature_dim,
            active_features,
            intra_edge_prob,
            own_topic_prob,
            label_noise,
            train_per_class,
            val,
            test,
        } => {
            let params = CitationParams {
                nodes: *nodes,
                classes: *classes,
                feature_dim: *feature_dim,
                active_features: *active_features,
                intra_edge_prob: *intra_edge_prob,
                own_topic_prob: *own_topic_prob,
                label_noise: *label_noise,
                train_per_class: *train_per_class,
                val: *val,
                test: *test,
            };
            Ok(synthetic_citation(&params, *seed))
        }
        DatasetSpec::Files { dir } => {
            let paths = DatasetPaths::under(dir);
            for p in [&paths.edges, &paths.features, &paths.labels, &paths.splits] {
                if !p.is_file() {
                    return Err(CliError::Config(format!(
                        "dataset file {} does not exist",
                        p.display()
                    )));
                }
            }
            load_graph(&paths.edges, &paths.features, &paths.labels, &paths.splits)
                .map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

/// SHA-256 over a canonical byte rendering of the graph: counts, adjacency,
/// labels, split masks and sparse feature rows. Stable across runs and
/// platforms.
pub fn dataset_checksum(g: &AttributedGraph) -> String {
    let mut h = Sha256::new();
    let n = g.node_count();
    h.update((n as u64).to_le_bytes());
    h.update((g.edge_count() as u64).to_le_bytes());
    h.update((g.features().dim() as u64).to_le_bytes());
    for v in 0..n {
        h.update((g.neighbors(v).len() as u32).to_le_bytes());
        for &u in g.neighbors(v) {
            h.update(u.to_le_bytes());
        }
        h.update(g.label(v).to_le_bytes());
        for &(c, x) in g.features().row(v) {
            h.update(c.to_le_bytes());
            h.update(x.to_bits().to_le_bytes());
        }
        h.update([0xff]);
    }
    for split in [Split::Train, Split::Val, Split::Test] {
        for v in g.split_nodes(split) {
            h.update((v as u64).to_le_bytes());
        }
        h.update([0xfe]);
    }
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Class count implied by the labels (max label + 1).
pub fn class_count(g: &AttributedGraph) -> Result<usize, CliError> {
    let max = g.labels().iter().copied().max().unwrap_or(-1);
    if max < 0 {
        return Err(CliError::Config(
            "dataset has no labeled nodes, so a classifier head cannot be sized".into(),
        ));
    }
    Ok(max as usize + 1)
}
