//! Node feature storage.
//!
//! Rows are stored sparsely as sorted `(column, value)` pairs. Bag-of-words
//! feature matrices are mostly zeros, and the layer-0 transform of every
//! model in this workspace is linear in the feature rows, so nnz-proportional
//! iteration is the operation that matters. Dense conversions are provided
//! for oracles and file output.

use ndarray::Array2;

/// Sparse-row node feature matrix. Row `i` holds the features of node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl FeatureMatrix {
    /// A matrix of `n` all-zero rows of width `dim`.
    pub fn zeros(n: usize, dim: usize) -> Self {
        FeatureMatrix {
            dim,
            rows: vec![Vec::new(); n],
        }
    }

    /// Builds from explicit sparse rows. Column indices must be in-range;
    /// rows are sorted and exact zeros are dropped.
    pub fn from_rows(dim: usize, mut rows: Vec<Vec<(u32, f64)>>) -> Self {
        for row in &mut rows {
            row.retain(|&(c, v)| {
                assert!((c as usize) < dim, "feature column {c} out of range for dim {dim}");
                v != 0.0
            });
            row.sort_unstable_by_key(|&(c, _)| c);
        }
        FeatureMatrix { dim, rows }
    }

    pub fn from_dense(dense: &Array2<f64>) -> Self {
        let dim = dense.ncols();
        let rows = dense
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c as u32, v))
                    .collect()
            })
            .collect();
        FeatureMatrix { dim, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Feature dimensionality (width).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Sparse row `i` as sorted `(column, value)` pairs.
    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j < self.dim);
        match self.rows[i].binary_search_by_key(&(j as u32), |&(c, _)| c) {
            Ok(k) => self.rows[i][k].1,
            Err(_) => 0.0,
        }
    }

    /// Writes row `i` densely into `out`, which must have length `dim()`.
    pub fn densify_row(&self, i: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim);
        out.fill(0.0);
        for &(c, v) in &self.rows[i] {
            out[c as usize] = v;
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut dense = Array2::zeros((self.rows.len(), self.dim));
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                dense[(i, c as usize)] = v;
            }
        }
        dense
    }

    /// New matrix holding the given rows, in order (rows may repeat).
    pub fn select(&self, indices: &[usize]) -> Self {
        FeatureMatrix {
            dim: self.dim,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}
