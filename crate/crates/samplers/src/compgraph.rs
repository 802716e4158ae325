//! Layered computational graphs.
//!
//! A computational graph records which node embeddings feed which
//! aggregations, layer by layer: `layers[0]` holds the deepest inputs and
//! `layers[depth]` holds the seeds. Entries are *slots*: a slot carries a
//! source-graph node id, and the decoupled sampler may give the same node
//! several independent slots. Every parent slot also appears as a slot in
//! the layer below (its self slot), so combine steps always have the
//! parent's previous-layer embedding; aggregation edges connect genuine
//! neighbors only and never the self pair. Source-graph degrees are recorded
//! per slot so degree normalization never depends on what was sampled.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use gnnlab_graph::{bfs_ball, AttributedGraph};

use crate::error::SamplerError;
use crate::spec::ShadowInner;

/// One aggregation edge: child slot in layer `l` feeding parent slot in
/// layer `l+1`, with an importance weight (1.0 when unweighted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggEdge {
    pub child: u32,
    pub parent: u32,
    pub weight: f64,
}

/// Connectivity between consecutive layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    /// Sorted by parent slot, then child slot.
    pub edges: Vec<AggEdge>,
    /// For each parent slot, the slot of the same node in the layer below.
    pub self_child: Vec<u32>,
    /// True when edge weights are importance weights summing to 1 per parent.
    pub weighted: bool,
}

/// A layered computational graph over some source graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputationalGraph {
    /// Slot -> source node id, one list per layer; `layers[depth()]` are the
    /// seed slots' nodes.
    pub layers: Vec<Vec<usize>>,
    /// Source-graph degree of each slot, aligned with `layers`.
    pub degrees: Vec<Vec<u32>>,
    /// `aggs[l]` connects `layers[l]` (children) to `layers[l+1]` (parents).
    pub aggs: Vec<Aggregation>,
    /// The seed nodes, in batch order.
    pub seeds: Vec<usize>,
    /// Slot index of each seed within the top layer.
    pub seed_slots: Vec<u32>,
    /// True when shared nodes were duplicated into independent copies.
    pub decoupled: bool,
    /// Parent slots left with no sampled children (importance samplers only).
    pub empty_parents: usize,
}

impl ComputationalGraph {
    /// Number of aggregation steps (the L of an L-layer model).
    pub fn depth(&self) -> usize {
        self.aggs.len()
    }

    /// Total slot count across layers.
    pub fn slot_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Asserts the structural invariants; used by tests and debug builds.
    pub fn validate(&self) {
        assert_eq!(self.layers.len(), self.aggs.len() + 1);
        assert_eq!(self.layers.len(), self.degrees.len());
        assert_eq!(self.seeds.len(), self.seed_slots.len());
        let top = self.layers.len() - 1;
        for (seed, &slot) in self.seeds.iter().zip(&self.seed_slots) {
            assert_eq!(self.layers[top][slot as usize], *seed);
        }
        for (l, agg) in self.aggs.iter().enumerate() {
            assert_eq!(agg.self_child.len(), self.layers[l + 1].len());
            for (p, &c) in agg.self_child.iter().enumerate() {
                assert_eq!(
                    self.layers[l][c as usize], self.layers[l + 1][p],
                    "self slot must hold the same node"
                );
            }
            let mut per_parent = vec![0.0; self.layers[l + 1].len()];
            for e in &agg.edges {
                assert!((e.child as usize) < self.layers[l].len());
                assert!((e.parent as usize) < self.layers[l + 1].len());
                per_parent[e.parent as usize] += e.weight;
            }
            if agg.weighted {
                for &s in &per_parent {
                    assert!(
                        s == 0.0 || (s - 1.0).abs() < 1e-9,
                        "weighted aggregation rows must sum to 1, got {s}"
                    );
                }
            }
        }
    }
}

fn check_depth(depth: usize) -> Result<(), SamplerError> {
    if depth == 0 {
        Err(SamplerError::ZeroDepth)
    } else {
        Ok(())
    }
}

fn check_layer_list(
    what: &'static str,
    depth: usize,
    got: usize,
) -> Result<(), SamplerError> {
    if depth == got {
        Ok(())
    } else {
        Err(SamplerError::LayerCountMismatch { what, depth, got })
    }
}

fn degrees_of(g: &AttributedGraph, nodes: &[usize]) -> Vec<u32> {
    nodes.iter().map(|&v| g.degree(v) as u32).collect()
}

/// Slot bookkeeping for one layer under construction.
struct LayerBuilder {
    nodes: Vec<usize>,
    slot_of: HashMap<usize, u32>,
}

impl LayerBuilder {
    fn new() -> Self {
        LayerBuilder {
            nodes: Vec::new(),
            slot_of: HashMap::new(),
        }
    }

    fn intern(&mut self, node: usize) -> u32 {
        if let Some(&s) = self.slot_of.get(&node) {
            return s;
        }
        let s = self.nodes.len() as u32;
        self.slot_of.insert(node, s);
        self.nodes.push(node);
        s
    }
}

/// The unsampled computational graph of a batch of seeds: layer `l` holds
/// every node within `depth - l` hops of a seed, and each parent aggregates
/// over its entire neighborhood.
pub fn full_computational_graph_batch(
    g: &AttributedGraph,
    seeds: &[usize],
    depth: usize,
) -> Result<ComputationalGraph, SamplerError> {
    check_depth(depth)?;
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(depth + 1);
    let mut builders: Vec<LayerBuilder> = Vec::with_capacity(depth + 1);

    let mut top = LayerBuilder::new();
    for &s in seeds {
        top.intern(s);
    }
    builders.push(top);
    for l in 0..depth {
        let mut below = LayerBuilder::new();
        // Carry every parent down first, then its neighbors.
        for &v in &builders[l].nodes {
            below.intern(v);
        }
        for parent_idx in 0..builders[l].nodes.len() {
            let v = builders[l].nodes[parent_idx];
            for &u in g.neighbors(v) {
                below.intern(u as usize);
            }
        }
        builders.push(below);
    }
    // builders[0] is the top layer; reverse into bottom-up order.
    builders.reverse();
    let mut aggs = Vec::with_capacity(depth);
    for l in 0..depth {
        let children = &builders[l];
        let parents = &builders[l + 1];
        let mut edges = Vec::new();
        let mut self_child = Vec::with_capacity(parents.nodes.len());
        for (p, &v) in parents.nodes.iter().enumerate() {
            self_child.push(children.slot_of[&v]);
            for &u in g.neighbors(v) {
                edges.push(AggEdge {
                    child: children.slot_of[&(u as usize)],
                    parent: p as u32,
                    weight: 1.0,
                });
            }
        }
        aggs.push(Aggregation {
            edges,
            self_child,
            weighted: false,
        });
    }
    for b in &builders {
        layers.push(b.nodes.clone());
    }
    let degrees = layers.iter().map(|nodes| degrees_of(g, nodes)).collect();
    let seed_slots = seeds
        .iter()
        .map(|s| layers[depth].iter().position(|v| v == s).unwrap() as u32)
        .collect();
    Ok(ComputationalGraph {
        layers,
        degrees,
        aggs,
        seeds: seeds.to_vec(),
        seed_slots,
        decoupled: false,
        empty_parents: 0,
    })
}

/// The full computational graph of a single seed.
pub fn full_computational_graph(
    g: &AttributedGraph,
    seed: usize,
    depth: usize,
) -> Result<ComputationalGraph, SamplerError> {
    full_computational_graph_batch(g, &[seed], depth)
}

/// Neighborhood-sampled computational graph of one seed: at each depth every
/// parent keeps a uniform subset of `fanouts[l]` neighbors (all of them when
/// the fanout exceeds the degree), drawn without replacement, plus itself.
///
/// `fanouts[0]` applies to the deepest aggregation, matching layer order.
pub fn sage_computational_graph(
    g: &AttributedGraph,
    seed: usize,
    fanouts: &[usize],
    rng: &mut impl Rng,
) -> Result<ComputationalGraph, SamplerError> {
    let depth = fanouts.len();
    check_depth(depth)?;

    // Build from the top down, sampling each parent's children.
    let mut rev_layers: Vec<LayerBuilder> = Vec::with_capacity(depth + 1);
    let mut rev_edges: Vec<Vec<AggEdge>> = Vec::with_capacity(depth);
    let mut top = LayerBuilder::new();
    top.intern(seed);
    rev_layers.push(top);
    for step in 0..depth {
        let fanout = fanouts[depth - 1 - step];
        let mut below = LayerBuilder::new();
        let mut edges = Vec::new();
        let parents = rev_layers[step].nodes.clone();
        for &v in &parents {
            below.intern(v);
        }
        for (p, &v) in parents.iter().enumerate() {
            let mut pool: Vec<u32> = g.neighbors(v).to_vec();
            let keep = fanout.min(pool.len());
            let (chosen, _) = pool.partial_shuffle(rng, keep);
            let mut chosen: Vec<u32> = chosen.to_vec();
            chosen.sort_unstable();
            for u in chosen {
                let c = below.intern(u as usize);
                edges.push(AggEdge {
                    child: c,
                    parent: p as u32,
                    weight: 1.0,
                });
            }
        }
        rev_layers.push(below);
        rev_edges.push(edges);
    }

    rev_layers.reverse();
    rev_edges.reverse();
    let layers: Vec<Vec<usize>> = rev_layers.iter().map(|b| b.nodes.clone()).collect();
    let mut aggs = Vec::with_capacity(depth);
    for l in 0..depth {
        let children = &rev_layers[l];
        let parents = &rev_layers[l + 1];
        let self_child = parents
            .nodes
            .iter()
            .map(|v| children.slot_of[v])
            .collect();
        aggs.push(Aggregation {
            edges: rev_edges[l].clone(),
            self_child,
            weighted: false,
        });
    }
    let degrees = layers.iter().map(|nodes| degrees_of(g, nodes)).collect();
    Ok(ComputationalGraph {
        seeds: vec![seed],
        seed_slots: vec![0],
        layers,
        degrees,
        aggs,
        decoupled: false,
        empty_parents: 0,
    })
}

/// Conditional importance of child `u` for parent `v`: the squared
/// normalized-adjacency entry, renormalized over the neighborhood of `v`.
pub fn fastgcn_importance(g: &AttributedGraph, v: usize) -> Vec<(usize, f64)> {
    let row = g.normalized_adjacency_row(v, false);
    let total: f64 = row.iter().map(|&(_, a)| a * a).sum();
    row.into_iter().map(|(u, a)| (u, a * a / total)).collect()
}

/// Layerwise importance-sampled computational graph of a whole batch.
///
/// At each depth the candidate pool is the union of the parents'
/// neighborhoods; `layer_sizes[l]` candidates are kept, drawn without
/// replacement with probability proportional to their pooled importance.
/// Surviving edges are reweighted so each parent's weights sum to 1; a
/// parent whose neighbors were all discarded is counted in `empty_parents`.
pub fn fastgcn_computational_graph(
    g: &AttributedGraph,
    seeds: &[usize],
    layer_sizes: &[usize],
    rng: &mut impl Rng,
) -> Result<ComputationalGraph, SamplerError> {
    let depth = layer_sizes.len();
    check_depth(depth)?;

    let mut rev_layers: Vec<LayerBuilder> = Vec::with_capacity(depth + 1);
    let mut rev_edges: Vec<Vec<AggEdge>> = Vec::with_capacity(depth);
    let mut empty_parents = 0usize;
    let mut top = LayerBuilder::new();
    for &s in seeds {
        top.intern(s);
    }
    rev_layers.push(top);

    for step in 0..depth {
        let size = layer_sizes[depth - 1 - step];
        let parents = rev_layers[step].nodes.clone();
        // Pooled candidate importances and the per-parent conditionals.
        let mut pooled: Vec<(usize, f64)> = Vec::new();
        let mut pooled_idx: HashMap<usize, usize> = HashMap::new();
        let mut conditionals: Vec<Vec<(usize, f64)>> = Vec::with_capacity(parents.len());
        for &v in &parents {
            let q = fastgcn_importance(g, v);
            for &(u, qu) in &q {
                match pooled_idx.get(&u) {
                    Some(&i) => pooled[i].1 += qu,
                    None => {
                        pooled_idx.insert(u, pooled.len());
                        pooled.push((u, qu));
                    }
                }
            }
            conditionals.push(q);
        }

        let kept: Vec<usize> = draw_weighted_without_replacement(&pooled, size, rng);
        let kept_set: HashMap<usize, ()> = kept.iter().map(|&u| (u, ())).collect();

        let mut below = LayerBuilder::new();
        for &v in &parents {
            below.intern(v);
        }
        let mut edges = Vec::new();
        for (p, cond) in conditionals.iter().enumerate() {
            let surviving: Vec<&(usize, f64)> =
                cond.iter().filter(|(u, _)| kept_set.contains_key(u)).collect();
            if surviving.is_empty() {
                if !cond.is_empty() {
                    empty_parents += 1;
                }
                continue;
            }
            let total: f64 = surviving.iter().map(|(_, q)| q).sum();
            for &&(u, q) in &surviving {
                let c = below.intern(u);
                edges.push(AggEdge {
                    child: c,
                    parent: p as u32,
                    weight: q / total,
                });
            }
        }
        rev_layers.push(below);
        rev_edges.push(edges);
    }

    rev_layers.reverse();
    rev_edges.reverse();
    let layers: Vec<Vec<usize>> = rev_layers.iter().map(|b| b.nodes.clone()).collect();
    let mut aggs = Vec::with_capacity(depth);
    for l in 0..depth {
        let children = &rev_layers[l];
        let parents = &rev_layers[l + 1];
        let self_child = parents.nodes.iter().map(|v| children.slot_of[v]).collect();
        aggs.push(Aggregation {
            edges: rev_edges[l].clone(),
            self_child,
            weighted: true,
        });
    }
    let degrees = layers.iter().map(|nodes| degrees_of(g, nodes)).collect();
    let seed_slots = seeds
        .iter()
        .map(|s| layers[depth].iter().position(|v| v == s).unwrap() as u32)
        .collect();
    Ok(ComputationalGraph {
        layers,
        degrees,
        aggs,
        seeds: seeds.to_vec(),
        seed_slots,
        decoupled: false,
        empty_parents,
    })
}

/// Successive weighted draws without replacement from `(item, weight)` pairs.
fn draw_weighted_without_replacement(
    pool: &[(usize, f64)],
    k: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    if k >= pool.len() {
        return pool.iter().map(|&(u, _)| u).collect();
    }
    let mut weights: Vec<f64> = pool.iter().map(|&(_, w)| w).collect();
    let mut drawn = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let x = rng.random::<f64>() * total;
        let mut cum = 0.0;
        let mut pick = weights.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            cum += w;
            if x < cum && w > 0.0 {
                pick = i;
                break;
            }
        }
        drawn.push(pool[pick].0);
        weights[pick] = 0.0;
    }
    drawn
}

/// Decoupled per-seed extraction: each seed gets an independent subgraph and
/// its own slots at every layer, so nodes shared between seeds become
/// independent copies. The model then propagates `depth` times over each
/// subgraph's induced edges.
pub fn shadow_extract(
    g: &AttributedGraph,
    seeds: &[usize],
    depth: usize,
    inner: &ShadowInner,
    rng: &mut impl Rng,
) -> Result<ComputationalGraph, SamplerError> {
    check_depth(depth)?;
    if let ShadowInner::Sage { fanouts } = inner {
        check_layer_list("fanouts", depth, fanouts.len())?;
    }
    if let ShadowInner::Fastgcn { layer_sizes } = inner {
        check_layer_list("layer_sizes", depth, layer_sizes.len())?;
    }

    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let nodes = match inner {
            ShadowInner::Full => bfs_ball(g, s, depth)?.parent_ids,
            ShadowInner::Sage { fanouts } => {
                let cg = sage_computational_graph(g, s, fanouts, rng)?;
                union_of_layers(&cg)
            }
            ShadowInner::Fastgcn { layer_sizes } => {
                let cg = fastgcn_computational_graph(g, &[s], layer_sizes, rng)?;
                union_of_layers(&cg)
            }
        };
        blocks.push(nodes);
    }

    let total: usize = blocks.iter().map(Vec::len).sum();
    let mut layer_nodes = Vec::with_capacity(total);
    for block in &blocks {
        layer_nodes.extend_from_slice(block);
    }
    let layer_degrees = degrees_of(g, &layer_nodes);

    // Identical aggregation at every depth: induced edges within each block.
    let mut edges = Vec::new();
    let mut offset = 0u32;
    let mut seed_slots = Vec::with_capacity(seeds.len());
    for (block, &seed) in blocks.iter().zip(seeds) {
        let slot_of: HashMap<usize, u32> = block
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, offset + i as u32))
            .collect();
        seed_slots.push(slot_of[&seed]);
        for (i, &v) in block.iter().enumerate() {
            let p = offset + i as u32;
            for &u in g.neighbors(v) {
                if let Some(&c) = slot_of.get(&(u as usize)) {
                    edges.push(AggEdge {
                        child: c,
                        parent: p,
                        weight: 1.0,
                    });
                }
            }
        }
        offset += block.len() as u32;
    }
    let self_child: Vec<u32> = (0..total as u32).collect();
    let agg = Aggregation {
        edges,
        self_child,
        weighted: false,
    };

    Ok(ComputationalGraph {
        layers: vec![layer_nodes.clone(); depth + 1],
        degrees: vec![layer_degrees; depth + 1],
        aggs: vec![agg; depth],
        seeds: seeds.to_vec(),
        seed_slots,
        decoupled: true,
        empty_parents: 0,
    })
}

fn union_of_layers(cg: &ComputationalGraph) -> Vec<usize> {
    let mut nodes: Vec<usize> = cg.layers.iter().flatten().copied().collect();
    nodes.sort_unstable();
    nodes.dedup();
    // Keep the seed first for readability of the blocks.
    let seed = cg.seeds[0];
    let pos = nodes.iter().position(|&v| v == seed).unwrap();
    nodes.swap(0, pos);
    nodes
}
