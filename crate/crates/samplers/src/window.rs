//! Advisory check of the minibatch-size window.
//!
//! Concentration of the minibatch gradient estimator wants batches at least
//! logarithmic in the node count, while locality arguments want them below
//! the square root. The check never rejects a configuration, it only reports.

use std::fmt;

/// Result of checking a batch size against the recommended window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchWindowReport {
    pub node_count: usize,
    pub batch_size: usize,
    /// Batch covers every node: plain full-gradient descent, always fine.
    pub full_gradient: bool,
    /// Batch below `ceil(log2 n)`.
    pub below_window: bool,
    /// Batch above `sqrt(n)`.
    pub above_window: bool,
}

impl BatchWindowReport {
    pub fn within_window(&self) -> bool {
        !self.below_window && !self.above_window
    }
}

impl fmt::Display for BatchWindowReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.full_gradient {
            write!(
                f,
                "batch {} covers all {} nodes: full gradient descent",
                self.batch_size, self.node_count
            )
        } else if self.below_window {
            write!(
                f,
                "batch {} below recommended minimum ceil(log2 {}) = {}",
                self.batch_size,
                self.node_count,
                log2_ceil(self.node_count)
            )
        } else if self.above_window {
            write!(
                f,
                "batch {} above recommended maximum sqrt({}) ~ {:.0}",
                self.batch_size,
                self.node_count,
                (self.node_count as f64).sqrt()
            )
        } else {
            write!(
                f,
                "batch {} within recommended window for {} nodes",
                self.batch_size, self.node_count
            )
        }
    }
}

fn log2_ceil(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Checks `batch_size` against the `[ceil(log2 n), sqrt(n)]` window.
pub fn validate_batch_window(node_count: usize, batch_size: usize) -> BatchWindowReport {
    let full_gradient = batch_size >= node_count;
    let (below, above) = if full_gradient {
        (false, false)
    } else {
        (
            batch_size < log2_ceil(node_count),
            (batch_size as f64) > (node_count as f64).sqrt(),
        )
    };
    BatchWindowReport {
        node_count,
        batch_size,
        full_gradient,
        below_window: below,
        above_window: above,
    }
}
