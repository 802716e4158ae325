//! Limit-object references for census comparisons.
//!
//! Depth-1 balls of a Poisson Galton-Watson tree are stars, so their
//! distribution has a closed form. Deeper references are estimated by
//! sampling trees; the sample count is recorded so callers can report the
//! sampling error alongside any distance computed against them.

use std::collections::BTreeMap;

use gnnlab_graph::{bfs_ball, AttributedGraph};
use rand::Rng;

use crate::census::CensusDistribution;
use crate::error::LimitsError;
use crate::signature::{ball_signature, SigKey, DEFAULT_FEATURE_BITS};

fn star_key(leaves: usize) -> SigKey {
    let edges: Vec<(usize, usize)> = (0..leaves).map(|i| (0, i + 1)).collect();
    let g = AttributedGraph::structural(leaves + 1, &edges)
        .expect("star construction is always valid");
    let ball = bfs_ball(&g, 0, 1).expect("root 0 exists");
    ball_signature(&ball, false, DEFAULT_FEATURE_BITS).key()
}

/// Closed-form distribution of depth-1 ball signatures under offspring law
/// Poisson(`lambda`): a star with `d` leaves has probability
/// `exp(-lambda) lambda^d / d!`, and the tail mass from `max_deg` upward is
/// folded into the `max_deg` bucket.
pub fn poisson_depth1_reference(
    lambda: f64,
    max_deg: usize,
) -> Result<CensusDistribution, LimitsError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(LimitsError::BadParameter(format!(
            "offspring mean must be finite and non-negative, got {lambda}"
        )));
    }

    let mut probs: BTreeMap<SigKey, f64> = BTreeMap::new();
    let mut all_exact = true;
    let mut pmf = (-lambda).exp();
    let mut acc = 0.0;
    for d in 0..max_deg {
        let key = star_key(d);
        all_exact &= key.exact.is_some();
        probs.insert(key, pmf);
        acc += pmf;
        pmf *= lambda / (d + 1) as f64;
    }
    let tail_key = star_key(max_deg);
    all_exact &= tail_key.exact.is_some();
    probs.insert(tail_key, (1.0 - acc).max(0.0));

    Ok(CensusDistribution {
        radius: 1,
        probs,
        samples: 0,
        exhaustive: true,
        all_exact,
    })
}

fn poisson_sample(lambda: f64, rng: &mut impl Rng) -> usize {
    let floor = (-lambda).exp();
    let mut k = 0usize;
    let mut p = 1.0f64;
    loop {
        p *= rng.random::<f64>();
        if p <= floor {
            return k;
        }
        k += 1;
    }
}

/// Monte-Carlo census of depth-`depth` balls of Poisson(`lambda`)
/// Galton-Watson trees. The `samples` field carries the draw count, so the
/// sampling error of any TV distance against this reference is on the order
/// of `sqrt(support / samples)`.
pub fn sample_gw_reference(
    lambda: f64,
    depth: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<CensusDistribution, LimitsError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(LimitsError::BadParameter(format!(
            "offspring mean must be finite and non-negative, got {lambda}"
        )));
    }
    if samples == 0 {
        return Err(LimitsError::BadParameter(
            "sample count must be positive".into(),
        ));
    }

    let mut counts: BTreeMap<SigKey, usize> = BTreeMap::new();
    let mut all_exact = true;
    for _ in 0..samples {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut level = vec![0usize];
        let mut next_id = 1usize;
        for _ in 0..depth {
            let mut next_level = Vec::new();
            for &v in &level {
                let children = poisson_sample(lambda, rng);
                for _ in 0..children {
                    edges.push((v, next_id));
                    next_level.push(next_id);
                    next_id += 1;
                }
            }
            level = next_level;
            if level.is_empty() {
                break;
            }
        }
        let g = AttributedGraph::structural(next_id, &edges)?;
        let ball = bfs_ball(&g, 0, depth)?;
        let sig = ball_signature(&ball, false, DEFAULT_FEATURE_BITS);
        all_exact &= sig.is_exact();
        *counts.entry(sig.key()).or_insert(0) += 1;
    }

    let probs: BTreeMap<SigKey, f64> = counts
        .into_iter()
        .map(|(key, c)| (key, c as f64 / samples as f64))
        .collect();

    Ok(CensusDistribution {
        radius: depth,
        probs,
        samples,
        exhaustive: false,
        all_exact,
    })
}
