//! Truncated-BFS subgraph sampling.
//!
//! A draw grows a BFS region from a uniformly random root, visiting each
//! frontier level in shuffled order and stopping at exactly `max_nodes`
//! visited nodes, so a partial last level is a uniform subset of that level.
//! If the root's component is exhausted first, a fresh root is drawn among
//! unvisited nodes and the draw continues, so the result can span several
//! components.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::GraphError;
use crate::graph::AttributedGraph;

/// A sampled subgraph together with its provenance.
#[derive(Debug, Clone)]
pub struct Subgraph {
    /// The induced graph; local node `i` corresponds to `parent_ids[i]`.
    pub graph: AttributedGraph,
    pub parent_ids: Vec<usize>,
    /// The BFS roots drawn, in order. Empty for a whole-graph draw.
    pub seed_roots: Vec<usize>,
}

/// Draws a subgraph of exactly `min(max_nodes, node_count)` nodes.
///
/// When `max_nodes >= node_count` the whole graph is returned unchanged with
/// identity node order and no randomness is consumed, so a whole-graph draw
/// replays exactly like training on the original graph.
pub fn bfs_subgraph(
    g: &AttributedGraph,
    max_nodes: usize,
    rng: &mut impl Rng,
) -> Result<Subgraph, GraphError> {
    let n = g.node_count();
    if max_nodes == 0 {
        return Err(GraphError::Validation("subgraph size must be positive".into()));
    }
    if max_nodes >= n {
        return Ok(Subgraph {
            graph: g.clone(),
            parent_ids: (0..n).collect(),
            seed_roots: Vec::new(),
        });
    }

    let mut visited: Vec<usize> = Vec::with_capacity(max_nodes);
    let mut seen = vec![false; n];
    let mut seed_roots = Vec::new();

    'outer: while visited.len() < max_nodes {
        let root = draw_unseen(&seen, rng);
        seed_roots.push(root);
        seen[root] = true;
        visited.push(root);
        if visited.len() == max_nodes {
            break;
        }

        let mut level = vec![root];
        while !level.is_empty() {
            let mut next: Vec<usize> = Vec::new();
            for &u in &level {
                for &w in g.neighbors(u) {
                    let w = w as usize;
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            next.shuffle(rng);
            for &w in &next {
                visited.push(w);
                if visited.len() == max_nodes {
                    break 'outer;
                }
            }
            level = next;
        }
    }

    let graph = g.induced(&visited)?;
    Ok(Subgraph {
        graph,
        parent_ids: visited,
        seed_roots,
    })
}

/// Uniform draw among indices where `seen` is false.
fn draw_unseen(seen: &[bool], rng: &mut impl Rng) -> usize {
    let unseen: Vec<usize> = (0..seen.len()).filter(|&v| !seen[v]).collect();
    unseen[rng.random_range(0..unseen.len())]
}
