//! Immutable attributed graphs in CSR form.
//!
//! Graphs are undirected and simple: construction symmetrizes the edge list,
//! removes duplicates and drops self-loops. Self-loops only ever appear as a
//! normalization-time view (see [`AttributedGraph::normalized_adjacency_row`]).

use crate::error::GraphError;
use crate::features::FeatureMatrix;

/// Dataset split membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// An undirected simple graph with per-node features, labels and split masks.
///
/// Neighbor lists are sorted, so neighborhood iteration and edge membership
/// tests are deterministic. Labels use `-1` for "unlabeled".
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    features: FeatureMatrix,
    labels: Vec<i64>,
    train_mask: Vec<bool>,
    val_mask: Vec<bool>,
    test_mask: Vec<bool>,
}

impl AttributedGraph {
    /// Builds a graph from an edge list.
    ///
    /// Edges are symmetrized and deduplicated and self-loops are dropped.
    /// `features` must have exactly `node_count` rows; `labels` must be `-1`
    /// or a non-negative class id; the three masks must be disjoint.
    pub fn from_edges(
        node_count: usize,
        edges: &[(usize, usize)],
        features: FeatureMatrix,
        labels: Vec<i64>,
        train_mask: Vec<bool>,
        val_mask: Vec<bool>,
        test_mask: Vec<bool>,
    ) -> Result<Self, GraphError> {
        if features.n_rows() != node_count {
            return Err(GraphError::Validation(format!(
                "feature matrix has {} rows for {} nodes",
                features.n_rows(),
                node_count
            )));
        }
        for (name, mask) in [
            ("labels", labels.len()),
            ("train mask", train_mask.len()),
            ("val mask", val_mask.len()),
            ("test mask", test_mask.len()),
        ] {
            if mask != node_count {
                return Err(GraphError::Validation(format!(
                    "{name} has length {mask} for {node_count} nodes"
                )));
            }
        }
        for (v, &label) in labels.iter().enumerate() {
            if label < -1 {
                return Err(GraphError::Validation(format!(
                    "node {v} has label {label}; labels must be -1 or a class id"
                )));
            }
        }
        for v in 0..node_count {
            let memberships =
                train_mask[v] as u8 + val_mask[v] as u8 + test_mask[v] as u8;
            if memberships > 1 {
                return Err(GraphError::Validation(format!(
                    "node {v} appears in more than one split"
                )));
            }
        }

        let mut pairs = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= node_count {
                    return Err(GraphError::NodeOutOfRange {
                        id,
                        node_count,
                    });
                }
            }
            if u != v {
                pairs.push((u.min(v) as u32, u.max(v) as u32));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut degrees = vec![0usize; node_count];
        for &(u, v) in &pairs {
            degrees[u as usize] += 1;
            degrees[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for v in 0..node_count {
            offsets.push(offsets[v] + degrees[v]);
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0u32; offsets[node_count]];
        for &(u, v) in &pairs {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for v in 0..node_count {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }

        Ok(AttributedGraph {
            offsets,
            neighbors,
            features,
            labels,
            train_mask,
            val_mask,
            test_mask,
        })
    }

    /// A graph with no features (width 0), no labels and empty masks.
    /// Convenient for generators and structural tests.
    pub fn structural(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        AttributedGraph::from_edges(
            node_count,
            edges,
            FeatureMatrix::zeros(node_count, 0),
            vec![-1; node_count],
            vec![false; node_count],
            vec![false; node_count],
            vec![false; node_count],
        )
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Mean degree `2|E| / n`. Zero for the empty graph.
    pub fn mean_degree(&self) -> f64 {
        if self.node_count() == 0 {
            0.0
        } else {
            self.neighbors.len() as f64 / self.node_count() as f64
        }
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> i64 {
        self.labels[v]
    }

    /// Number of classes, inferred as `max label + 1` (0 when unlabeled).
    pub fn num_classes(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn in_split(&self, v: usize, split: Split) -> bool {
        match split {
            Split::Train => self.train_mask[v],
            Split::Val => self.val_mask[v],
            Split::Test => self.test_mask[v],
        }
    }

    /// Node ids belonging to `split`, ascending.
    pub fn split_nodes(&self, split: Split) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| self.in_split(v, split)).collect()
    }

    pub fn masks(&self) -> (&[bool], &[bool], &[bool]) {
        (&self.train_mask, &self.val_mask, &self.test_mask)
    }

    /// Row `v` of the symmetrically normalized adjacency matrix, as sorted
    /// `(column, value)` pairs.
    ///
    /// Without self-loops the entries are `1/sqrt(deg(v) deg(u))` for each
    /// neighbor `u`. With self-loops the matrix is built over `A + I`, so
    /// degrees are incremented by one and the diagonal entry is included.
    /// An isolated node yields an empty row without self-loops and the single
    /// entry `(v, 1.0)` with them.
    pub fn normalized_adjacency_row(&self, v: usize, with_self_loops: bool) -> Vec<(usize, f64)> {
        let bump = usize::from(with_self_loops);
        let dv = (self.degree(v) + bump) as f64;
        let mut row = Vec::with_capacity(self.degree(v) + bump);
        let mut self_emitted = !with_self_loops;
        for &u in self.neighbors(v) {
            let u = u as usize;
            if !self_emitted && u > v {
                row.push((v, 1.0 / dv));
                self_emitted = true;
            }
            let du = (self.degree(u) + bump) as f64;
            row.push((u, 1.0 / (dv * du).sqrt()));
        }
        if !self_emitted {
            row.push((v, 1.0 / dv));
        }
        row
    }

    /// The induced subgraph on `nodes` (which must be distinct and in-range).
    /// Local node `i` corresponds to `nodes[i]`; features, labels and masks
    /// are carried over.
    pub fn induced(&self, nodes: &[usize]) -> Result<AttributedGraph, GraphError> {
        let mut local_of: std::collections::HashMap<usize, u32> =
            std::collections::HashMap::with_capacity(nodes.len());
        for (i, &p) in nodes.iter().enumerate() {
            if p >= self.node_count() {
                return Err(GraphError::NodeOutOfRange {
                    id: p,
                    node_count: self.node_count(),
                });
            }
            if local_of.insert(p, i as u32).is_some() {
                return Err(GraphError::Validation(format!(
                    "node {p} listed twice in induced node set"
                )));
            }
        }
        let mut edges = Vec::new();
        for (i, &p) in nodes.iter().enumerate() {
            for &q in self.neighbors(p) {
                if let Some(&j) = local_of.get(&(q as usize)) {
                    if (i as u32) < j {
                        edges.push((i, j as usize));
                    }
                }
            }
        }
        AttributedGraph::from_edges(
            nodes.len(),
            &edges,
            self.features.select(nodes),
            nodes.iter().map(|&p| self.labels[p]).collect(),
            nodes.iter().map(|&p| self.train_mask[p]).collect(),
            nodes.iter().map(|&p| self.val_mask[p]).collect(),
            nodes.iter().map(|&p| self.test_mask[p]).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(leaves: usize) -> AttributedGraph {
        let edges: Vec<(usize, usize)> = (1..=leaves).map(|l| (0, l)).collect();
        AttributedGraph::structural(leaves + 1, &edges).unwrap()
    }

    #[test]
    fn builds_symmetric_dedup_no_self_loops() {
        let g = AttributedGraph::structural(4, &[(0, 1), (1, 0), (1, 2), (2, 2), (3, 1)]).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.neighbors(1), &[0, 2, 3]);
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(2, 2));
        assert_eq!(g.degree(2), 1);
    }

    #[test]
    fn rejects_out_of_range_and_bad_masks() {
        assert!(matches!(
            AttributedGraph::structural(2, &[(0, 5)]),
            Err(GraphError::NodeOutOfRange { id: 5, .. })
        ));
        let err = AttributedGraph::from_edges(
            1,
            &[],
            FeatureMatrix::zeros(1, 0),
            vec![0],
            vec![true],
            vec![true],
            vec![false],
        );
        assert!(matches!(err, Err(GraphError::Validation(_))));
    }

    #[test]
    fn normalized_adjacency_star_values() {
        let g = star(3);
        let row = g.normalized_adjacency_row(0, false);
        assert_eq!(row.len(), 3);
        for &(u, w) in &row {
            assert!(u >= 1);
            assert!((w - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        let leaf = g.normalized_adjacency_row(1, false);
        assert_eq!(leaf.len(), 1);
        assert!((leaf[0].1 - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normalized_adjacency_self_loop_cases() {
        let isolated = AttributedGraph::structural(1, &[]).unwrap();
        assert!(isolated.normalized_adjacency_row(0, false).is_empty());
        assert_eq!(isolated.normalized_adjacency_row(0, true), vec![(0, 1.0)]);

        let g = star(3);
        let row = g.normalized_adjacency_row(0, true);
        assert_eq!(row.first().unwrap().0, 0);
        assert!((row[0].1 - 0.25).abs() < 1e-12);
        for &(u, w) in &row[1..] {
            assert!(u >= 1);
            assert!((w - 1.0 / (4.0f64 * 2.0).sqrt()).abs() < 1e-12);
        }
        let sum_check: Vec<usize> = row.iter().map(|&(u, _)| u).collect();
        assert_eq!(sum_check, vec![0, 1, 2, 3]);
    }

    #[test]
    fn induced_subgraph_carries_attributes() {
        let features = FeatureMatrix::from_rows(1, vec![vec![(0, 1.0)], vec![(0, 2.0)], vec![(0, 3.0)]]);
        let g = AttributedGraph::from_edges(
            3,
            &[(0, 1), (1, 2)],
            features,
            vec![0, 1, -1],
            vec![true, false, false],
            vec![false, true, false],
            vec![false, false, true],
        )
        .unwrap();
        let sub = g.induced(&[2, 1]).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
        assert_eq!(sub.label(0), -1);
        assert_eq!(sub.label(1), 1);
        assert_eq!(sub.features().get(0, 0), 3.0);
        assert!(sub.in_split(1, Split::Val));
        assert!(sub.in_split(0, Split::Test));
    }

    #[test]
    fn num_classes_from_labels() {
        let g = AttributedGraph::from_edges(
            3,
            &[],
            FeatureMatrix::zeros(3, 0),
            vec![-1, 4, 2],
            vec![false; 3],
            vec![false; 3],
            vec![false; 3],
        )
        .unwrap();
        assert_eq!(g.num_classes(), 5);
        assert_eq!(AttributedGraph::structural(2, &[]).unwrap().num_classes(), 0);
    }
}
