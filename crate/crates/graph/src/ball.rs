//! Rooted BFS balls: the induced subgraph on all nodes within `k` hops of a
//! root, with per-node root distances.

use std::collections::HashMap;
use std::collections::VecDeque;

use crate::error::GraphError;
use crate::features::FeatureMatrix;
use crate::graph::AttributedGraph;

/// The `k`-hop ball around a root node.
///
/// Local node 0 is always the root, and nodes appear in BFS discovery order,
/// so `depth_of` is non-decreasing. Features, labels and masks are copied
/// from the parent graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedBall {
    /// Local id -> parent-graph id. `parent_ids[0]` is the root.
    pub parent_ids: Vec<usize>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    /// Hop distance from the root, per local node.
    pub depth_of: Vec<usize>,
    /// The radius the ball was extracted at.
    pub radius: usize,
    pub features: FeatureMatrix,
    pub labels: Vec<i64>,
    pub train_mask: Vec<bool>,
    pub val_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
}

/// Extracts the `k`-hop ball around `root`.
pub fn bfs_ball(g: &AttributedGraph, root: usize, k: usize) -> Result<RootedBall, GraphError> {
    if root >= g.node_count() {
        return Err(GraphError::NodeOutOfRange {
            id: root,
            node_count: g.node_count(),
        });
    }

    let mut parent_ids = vec![root];
    let mut depth_of = vec![0usize];
    let mut local_of: HashMap<usize, u32> = HashMap::new();
    local_of.insert(root, 0);
    let mut queue = VecDeque::new();
    queue.push_back(0u32);

    while let Some(i) = queue.pop_front() {
        let depth = depth_of[i as usize];
        if depth == k {
            continue;
        }
        let p = parent_ids[i as usize];
        for &q in g.neighbors(p) {
            let q = q as usize;
            if !local_of.contains_key(&q) {
                let j = parent_ids.len() as u32;
                local_of.insert(q, j);
                parent_ids.push(q);
                depth_of.push(depth + 1);
                queue.push_back(j);
            }
        }
    }

    let (offsets, neighbors) = induce_csr(g, &parent_ids, &local_of);
    let (train, val, test) = g.masks();
    Ok(RootedBall {
        features: g.features().select(&parent_ids),
        labels: parent_ids.iter().map(|&p| g.labels()[p]).collect(),
        train_mask: parent_ids.iter().map(|&p| train[p]).collect(),
        val_mask: parent_ids.iter().map(|&p| val[p]).collect(),
        test_mask: parent_ids.iter().map(|&p| test[p]).collect(),
        parent_ids,
        offsets,
        neighbors,
        depth_of,
        radius: k,
    })
}

fn induce_csr(
    g: &AttributedGraph,
    parent_ids: &[usize],
    local_of: &HashMap<usize, u32>,
) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = Vec::with_capacity(parent_ids.len() + 1);
    offsets.push(0);
    let mut neighbors = Vec::new();
    for &p in parent_ids {
        let start = neighbors.len();
        for &q in g.neighbors(p) {
            if let Some(&j) = local_of.get(&(q as usize)) {
                neighbors.push(j);
            }
        }
        neighbors[start..].sort_unstable();
        offsets.push(neighbors.len());
    }
    (offsets, neighbors)
}

impl RootedBall {
    pub fn node_count(&self) -> usize {
        self.parent_ids.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted local neighbor list.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// The sub-ball of radius `k <= radius`: nodes at depth `<= k` with the
    /// edges among them. BFS order puts those nodes in a prefix, so local ids
    /// are preserved.
    pub fn truncate(&self, k: usize) -> RootedBall {
        assert!(k <= self.radius, "cannot truncate radius {} ball to {k}", self.radius);
        let keep = self.depth_of.partition_point(|&d| d <= k);
        let indices: Vec<usize> = (0..keep).collect();
        let mut offsets = Vec::with_capacity(keep + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for v in 0..keep {
            for &u in self.neighbors(v) {
                if (u as usize) < keep {
                    neighbors.push(u);
                }
            }
            offsets.push(neighbors.len());
        }
        RootedBall {
            parent_ids: self.parent_ids[..keep].to_vec(),
            offsets,
            neighbors,
            depth_of: self.depth_of[..keep].to_vec(),
            radius: k,
            features: self.features.select(&indices),
            labels: self.labels[..keep].to_vec(),
            train_mask: self.train_mask[..keep].to_vec(),
            val_mask: self.val_mask[..keep].to_vec(),
            test_mask: self.test_mask[..keep].to_vec(),
        }
    }
}
