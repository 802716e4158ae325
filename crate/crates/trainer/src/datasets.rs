//! Deterministic fixtures and synthetic citation-style benchmarks.

use gnnlab_graph::{AttributedGraph, FeatureMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 20 nodes in two densely knit communities with linearly separable
/// features: a smoke-test graph a two-layer model fits exactly.
pub fn toy_two_class_graph() -> AttributedGraph {
    let n = 20;
    let mut edges = Vec::new();
    for c in 0..2 {
        let base = 10 * c;
        for i in 0..10 {
            edges.push((base + i, base + (i + 1) % 10));
            edges.push((base + i, base + (i + 2) % 10));
        }
    }
    edges.push((0, 10));
    edges.push((5, 15));

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    for v in 0..n {
        let class = v / 10;
        let jitter = 0.05 * (v % 4) as f64;
        let (a, b) = (1.0 - jitter, jitter);
        rows.push(if class == 0 {
            vec![(0u32, a), (1u32, b)]
        } else {
            vec![(0u32, b), (1u32, a)]
        });
        labels.push(class as i64);
        match v % 10 {
            0..=4 => train[v] = true,
            5 | 6 => val[v] = true,
            _ => test[v] = true,
        }
    }

    AttributedGraph::from_edges(
        n,
        &edges,
        FeatureMatrix::from_rows(2, rows),
        labels,
        train,
        val,
        test,
    )
    .expect("fixture construction is static")
}

#[derive(Debug, Clone)]
pub struct CitationParams {
    pub nodes: usize,
    pub classes: usize,
    pub feature_dim: usize,
    pub active_features: usize,
    pub intra_edge_prob: f64,
    pub own_topic_prob: f64,
    /// Fraction of observed labels flipped to a uniform class after
    /// features and edges are generated; caps attainable accuracy.
    pub label_noise: f64,
    pub train_per_class: usize,
    pub val: usize,
    pub test: usize,
}

pub fn synthetic_citation(p: &CitationParams, seed: u64) -> AttributedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.nodes;

    let mut labels: Vec<i64> = (0..n).map(|v| (v % p.classes) as i64).collect();
    labels.shuffle(&mut rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); p.classes];
    for (v, &l) in labels.iter().enumerate() {
        members[l as usize].push(v);
    }

    let mut edges = Vec::new();
    for v in 0..n {
        let count = 1 + rng.random_range(0..3);
        for _ in 0..count {
            let target = if rng.random::<f64>() < p.intra_edge_prob {
                let pool = &members[labels[v] as usize];
                pool[rng.random_range(0..pool.len())]
            } else {
                rng.random_range(0..n)
            };
            edges.push((v, target));
        }
    }

    let block = p.feature_dim / p.classes;
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    for v in 0..n {
        let own_start = labels[v] as usize * block;
        let mut cols: Vec<u32> = (0..p.active_features)
            .map(|_| {
                if rng.random::<f64>() < p.own_topic_prob {
                    (own_start + rng.random_range(0..block)) as u32
                } else {
                    rng.random_range(0..p.feature_dim) as u32
                }
            })
            .collect();
        cols.sort_unstable();
        cols.dedup();
        rows.push(cols.into_iter().map(|c| (c, 1.0)).collect());
    }

    for l in labels.iter_mut() {
        if rng.random::<f64>() < p.label_noise {
            *l = rng.random_range(0..p.classes) as i64;
        }
    }

    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut quota = vec![p.train_per_class; p.classes];
    let mut rest = Vec::new();
    for &v in &order {
        let class = labels[v] as usize;
        if quota[class] > 0 {
            quota[class] -= 1;
            train[v] = true;
        } else {
            rest.push(v);
        }
    }
    for (i, &v) in rest.iter().enumerate() {
        if i < p.val {
            val[v] = true;
        } else if i < p.val + p.test {
            test[v] = true;
        }
    }

    AttributedGraph::from_edges(
        n,
        &edges,
        FeatureMatrix::from_rows(p.feature_dim, rows),
        labels,
        train,
        val,
        test,
    )
    .expect("synthetic parameters are consistent")
}

/// Synthetic stand-in for a small citation benchmark: 2708 nodes, 7 classes,
/// 1433 binary features, 140/500/1000 splits.
pub fn cora_like(seed: u64) -> AttributedGraph {
    synthetic_citation(
        &CitationParams {
            nodes: 2708,
            classes: 7,
            feature_dim: 1433,
            active_features: 18,
            intra_edge_prob: 0.85,
            own_topic_prob: 0.9,
            label_noise: 0.2,
            train_per_class: 20,
            val: 500,
            test: 1000,
        },
        seed,
    )
}

/// Synthetic stand-in for a mid-size citation benchmark: 3327 nodes,
/// 6 classes, 3703 binary features, 120/500/1000 splits.
pub fn citeseer_like(seed: u64) -> AttributedGraph {
    synthetic_citation(
        &CitationParams {
            nodes: 3327,
            classes: 6,
            feature_dim: 3703,
            active_features: 32,
            intra_edge_prob: 0.85,
            own_topic_prob: 0.9,
            label_noise: 0.28,
            train_per_class: 20,
            val: 500,
            test: 1000,
        },
        seed,
    )
}
