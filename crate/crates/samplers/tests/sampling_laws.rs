//! Distributional checks of the samplers against hand-computed laws.

use std::collections::HashMap;

use gnnlab_graph::{AttributedGraph, FeatureMatrix};
use gnnlab_samplers::{
    fastgcn_computational_graph, sage_computational_graph, sample_minibatch, shadow_extract,
    NodeSampler, ShadowInner,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn with_all_train(node_count: usize, edges: &[(usize, usize)]) -> AttributedGraph {
    AttributedGraph::from_edges(
        node_count,
        edges,
        FeatureMatrix::zeros(node_count, 0),
        vec![-1; node_count],
        vec![true; node_count],
        vec![false; node_count],
        vec![false; node_count],
    )
    .unwrap()
}

#[test]
fn uniform_minibatch_inclusion_rates() {
    let g = with_all_train(10, &[(0, 1)]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 20_000;
    let mut counts = vec![0usize; 10];
    for _ in 0..trials {
        let batch = sample_minibatch(&g, NodeSampler::Uniform, 3, &mut rng).unwrap();
        assert_eq!(batch.nodes.len(), 3);
        assert!(batch.weights.iter().all(|&w| w == 1.0));
        for &v in &batch.nodes {
            counts[v] += 1;
        }
    }
    for v in 0..10 {
        let rate = counts[v] as f64 / trials as f64;
        assert!((rate - 0.3).abs() < 0.02, "node {v} rate {rate}");
    }
}

#[test]
fn degree_weighted_star_center_rate() {
    // Star with 3 leaves, all nodes trainable: degree weighting gives the
    // center 3 of the 6 edge endpoints, so a size-1 batch picks it half the
    // time, with importance weight deg * n / (2|E|) = 3 * 4 / 6 = 2.
    let g = with_all_train(4, &[(0, 1), (0, 2), (0, 3)]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 20_000;
    let mut center = 0usize;
    for _ in 0..trials {
        let batch = sample_minibatch(&g, NodeSampler::DegreeWeighted, 1, &mut rng).unwrap();
        assert_eq!(batch.nodes.len(), 1);
        if batch.nodes[0] == 0 {
            center += 1;
            assert!((batch.weights[0] - 2.0).abs() < 1e-12);
        } else {
            assert!((batch.weights[0] - 2.0 / 3.0).abs() < 1e-12);
        }
    }
    let rate = center as f64 / trials as f64;
    assert!((rate - 0.5).abs() < 0.015, "center rate {rate}");
}

#[test]
fn oversized_batch_clamps_to_all_train_nodes() {
    let g = with_all_train(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for sampler in [NodeSampler::Uniform, NodeSampler::DegreeWeighted] {
        let batch = sample_minibatch(&g, sampler, 50, &mut rng).unwrap();
        assert!(batch.clamped);
        let mut nodes = batch.nodes.clone();
        nodes.sort_unstable();
        assert_eq!(nodes, vec![0, 1, 2, 3, 4]);
    }
}

#[test]
fn no_train_nodes_is_an_error() {
    let g = AttributedGraph::structural(4, &[(0, 1)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_minibatch(&g, NodeSampler::Uniform, 2, &mut rng).is_err());
}

#[test]
fn minibatch_stream_is_deterministic_per_seed() {
    let g = with_all_train(30, &[(0, 1), (2, 3), (4, 5), (6, 7)]);
    let draws = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..10)
            .map(|_| sample_minibatch(&g, NodeSampler::Uniform, 4, &mut rng).unwrap().nodes)
            .collect::<Vec<_>>()
    };
    assert_eq!(draws(11), draws(11));
    assert_ne!(draws(11), draws(12));
}

#[test]
fn sage_marginal_inclusion_matches_fanout_over_degree() {
    // Node of degree 3 sampled with fanout 2: each neighbor appears with
    // probability 2/3, and each of the three 2-subsets with probability 1/3.
    let g = with_all_train(4, &[(0, 1), (0, 2), (0, 3)]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 10_000;
    let mut neighbor_counts: HashMap<usize, usize> = HashMap::new();
    let mut subset_counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..trials {
        let cg = sage_computational_graph(&g, 0, &[2], &mut rng).unwrap();
        let mut chosen: Vec<usize> = cg.aggs[0]
            .edges
            .iter()
            .map(|e| cg.layers[0][e.child as usize])
            .collect();
        chosen.sort_unstable();
        assert_eq!(chosen.len(), 2);
        for &u in &chosen {
            *neighbor_counts.entry(u).or_default() += 1;
        }
        *subset_counts.entry(chosen).or_default() += 1;
    }
    for u in 1..=3 {
        let rate = neighbor_counts[&u] as f64 / trials as f64;
        assert!((rate - 2.0 / 3.0).abs() < 0.02, "neighbor {u} rate {rate}");
    }
    assert_eq!(subset_counts.len(), 3);
    for (subset, count) in subset_counts {
        let rate = count as f64 / trials as f64;
        assert!((rate - 1.0 / 3.0).abs() < 0.02, "subset {subset:?} rate {rate}");
    }
}

#[test]
fn fastgcn_layer_keeps_requested_count_across_batch() {
    // Two seeds on a 5-cycle pooled together: layer keeps exactly 3 distinct
    // candidates, and every parent's surviving weights sum to 1.
    let g = with_all_train(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let cg = fastgcn_computational_graph(&g, &[0, 2], &[3], &mut rng).unwrap();
        cg.validate();
        let mut kept: Vec<usize> = cg.aggs[0]
            .edges
            .iter()
            .map(|e| cg.layers[0][e.child as usize])
            .collect();
        kept.sort_unstable();
        kept.dedup();
        assert!(kept.len() <= 3);
        let mut per_parent: HashMap<u32, f64> = HashMap::new();
        for e in &cg.aggs[0].edges {
            *per_parent.entry(e.parent).or_default() += e.weight;
        }
        for (&p, &total) in &per_parent {
            assert!((total - 1.0).abs() < 1e-9, "parent {p} weights sum {total}");
        }
    }
}

#[test]
fn shadow_block_sizes_add_up() {
    // Triangle plus pendant: balls of radius 1 around 0 and 1 overlap in
    // two nodes; block sizes must be the two ball sizes, not the union.
    let g = with_all_train(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cg = shadow_extract(&g, &[0, 1], 1, &ShadowInner::Full, &mut rng).unwrap();
    cg.validate();
    assert_eq!(cg.layers[0].len(), 6);
    assert_eq!(cg.seed_slots.len(), 2);
    assert_eq!(cg.layers[0][cg.seed_slots[0] as usize], 0);
    assert_eq!(cg.layers[0][cg.seed_slots[1] as usize], 1);
}
