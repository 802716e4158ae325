//! Minibatch node sampling.
//!
//! Both modes draw without replacement from the train-mask nodes. The
//! weighted mode must keep the importance-corrected gradient estimator
//! exactly unbiased, which pins down the design: node `v` has to land in the
//! batch with probability exactly `B * w_v / sum(w)`. Randomized systematic
//! sampling achieves those inclusion probabilities with a single uniform
//! draw; nodes too heavy for one batch slot are first promoted to certainty
//! members and the rest are sampled from what remains.

use rand::seq::SliceRandom;
use rand::Rng;

use gnnlab_graph::{AttributedGraph, Split};

use crate::error::SamplerError;
use crate::spec::NodeSampler;

/// A drawn minibatch. `weights[i]` is the importance weight of `nodes[i]`,
/// normalized so that the estimator `(1/B) * sum(grad_v / weight_v)` has the
/// full training mean as its exact expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    /// Set when the requested batch exceeded the candidate pool.
    pub clamped: bool,
}

/// Draws a minibatch of `batch_size` train nodes.
pub fn sample_minibatch(
    g: &AttributedGraph,
    sampler: NodeSampler,
    batch_size: usize,
    rng: &mut impl Rng,
) -> Result<Minibatch, SamplerError> {
    if batch_size == 0 {
        return Err(SamplerError::EmptyBatch);
    }
    let candidates = g.split_nodes(Split::Train);
    if candidates.is_empty() {
        return Err(SamplerError::NoTrainNodes);
    }
    let clamped = batch_size > candidates.len();
    if clamped {
        log::warn!(
            "batch size {batch_size} exceeds {} train nodes; clamping",
            candidates.len()
        );
    }
    let b = batch_size.min(candidates.len());

    match sampler {
        NodeSampler::Uniform => {
            let mut pool = candidates;
            let (batch, _) = pool.partial_shuffle(rng, b);
            let mut nodes = batch.to_vec();
            nodes.sort_unstable();
            Ok(Minibatch {
                weights: vec![1.0; nodes.len()],
                nodes,
                clamped,
            })
        }
        NodeSampler::DegreeWeighted => {
            let raw: Vec<f64> = candidates.iter().map(|&v| g.degree(v) as f64).collect();
            if raw.iter().all(|&w| w == 0.0) {
                return Err(SamplerError::AllWeightsZero);
            }
            let m = candidates.len() as f64;
            let u = rng.random::<f64>();
            let drawn = systematic_inclusion_sample(&raw, b, u);
            let mut nodes = Vec::with_capacity(drawn.len());
            let mut weights = Vec::with_capacity(drawn.len());
            for (idx, pi) in drawn {
                nodes.push(candidates[idx]);
                // pi * m / B makes (1/B) * sum(1/weight) integrate to the
                // plain mean over the m candidates.
                weights.push(pi * m / b as f64);
            }
            Ok(Minibatch {
                nodes,
                weights,
                clamped,
            })
        }
    }
}

/// Draws `k` distinct indices with inclusion probability exactly
/// `min(1, k_rem * w_i / total_rem)` using one uniform `u` in `[0, 1)`.
///
/// Indices whose weight is too large for a single slot are included with
/// certainty and the remainder are drawn by randomized systematic sampling,
/// walking a cumulative-weight axis with a fixed stride. Returns
/// `(index, inclusion_probability)` pairs in ascending index order.
///
/// Zero-weight indices are never selected; `k` is clamped to the number of
/// positive weights.
pub fn systematic_inclusion_sample(weights: &[f64], k: usize, u: f64) -> Vec<(usize, f64)> {
    assert!((0.0..1.0).contains(&u), "u must lie in [0,1)");
    for &w in weights {
        assert!(w >= 0.0 && w.is_finite(), "weights must be finite and non-negative");
    }
    let mut active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut k_rem = k.min(active.len());
    let mut selected: Vec<(usize, f64)> = Vec::with_capacity(k_rem);

    // Promote indices that systematic sampling cannot handle (stride shorter
    // than their weight span) to certainty members. Removing one changes the
    // ratios of the rest, so iterate to a fixed point.
    loop {
        if k_rem == 0 {
            break;
        }
        let total: f64 = active.iter().map(|&i| weights[i]).sum();
        let mut promoted = false;
        active.retain(|&i| {
            if k_rem > 0 && (k_rem as f64) * weights[i] >= total {
                selected.push((i, 1.0));
                k_rem -= 1;
                promoted = true;
                false
            } else {
                true
            }
        });
        if !promoted {
            break;
        }
    }

    if k_rem > 0 {
        let total: f64 = active.iter().map(|&i| weights[i]).sum();
        let stride = total / k_rem as f64;
        // Each weight interval is shorter than the stride, so consecutive
        // sample points land in distinct intervals. The pointer walk clamps
        // the final point into the last interval if rounding pushes it past
        // the cumulative total, and the adjacency guard drops the (measure
        // zero) duplicate that clamping could produce.
        let mut idx = 0;
        let mut cum_end = weights[active[0]];
        let mut last_pick = usize::MAX;
        for j in 0..k_rem {
            let point = (u + j as f64) * stride;
            while point >= cum_end && idx + 1 < active.len() {
                idx += 1;
                cum_end += weights[active[idx]];
            }
            let i = active[idx];
            if i != last_pick {
                selected.push((i, k_rem as f64 * weights[i] / total));
                last_pick = i;
            }
        }
    }

    selected.sort_unstable_by_key(|&(i, _)| i);
    selected
}
