//! Empirical distributions of rooted-ball signatures.

use std::collections::BTreeMap;

use gnnlab_graph::{bfs_ball, AttributedGraph};
use rand::Rng;

use crate::error::LimitsError;
use crate::signature::{ball_signature, SigKey, DEFAULT_FEATURE_BITS};

/// Distribution of `radius`-ball signatures over root choices.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusDistribution {
    pub radius: usize,
    /// Probability per signature; sums to 1 within 1e-9.
    pub probs: BTreeMap<SigKey, f64>,
    /// Number of roots tallied. 0 marks an analytically constructed
    /// distribution.
    pub samples: usize,
    /// True when every node served as a root, false for sampled roots.
    pub exhaustive: bool,
    /// True when every signature carries its exact canonical encoding.
    pub all_exact: bool,
}

/// Tallies ball signatures over every node, or over `cap` uniformly drawn
/// roots when the graph is larger than `cap`.
pub fn neighborhood_census(
    g: &AttributedGraph,
    k: usize,
    attributed: bool,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<CensusDistribution, LimitsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }
    if cap == 0 {
        return Err(LimitsError::BadParameter(
            "census sample cap must be positive".into(),
        ));
    }

    let exhaustive = n <= cap;
    let roots: Vec<usize> = if exhaustive {
        (0..n).collect()
    } else {
        (0..cap).map(|_| rng.random_range(0..n)).collect()
    };

    let mut counts: BTreeMap<SigKey, usize> = BTreeMap::new();
    let mut all_exact = true;
    for &root in &roots {
        let ball = bfs_ball(g, root, k)?;
        let sig = ball_signature(&ball, attributed, DEFAULT_FEATURE_BITS);
        all_exact &= sig.is_exact();
        *counts.entry(sig.key()).or_insert(0) += 1;
    }

    let total = roots.len() as f64;
    let probs: BTreeMap<SigKey, f64> = counts
        .into_iter()
        .map(|(key, c)| (key, c as f64 / total))
        .collect();
    debug_assert!((probs.values().sum::<f64>() - 1.0).abs() < 1e-9);

    Ok(CensusDistribution {
        radius: k,
        probs,
        samples: roots.len(),
        exhaustive,
        all_exact,
    })
}

/// Total variation distance between two censuses of equal radius.
pub fn tv_distance(
    a: &CensusDistribution,
    b: &CensusDistribution,
) -> Result<f64, LimitsError> {
    if a.radius != b.radius {
        return Err(LimitsError::RadiusMismatch {
            left: a.radius,
            right: b.radius,
        });
    }
    let mut sum = 0.0;
    for (key, &p) in &a.probs {
        let q = b.probs.get(key).copied().unwrap_or(0.0);
        sum += (p - q).abs();
    }
    for (key, &q) in &b.probs {
        if !a.probs.contains_key(key) {
            sum += q;
        }
    }
    Ok(0.5 * sum)
}

/// Renders a census as tab-separated `signature_hash<TAB>probability` lines,
/// ordered by hash.
pub fn census_tsv(c: &CensusDistribution) -> String {
    let mut out = String::new();
    for (key, prob) in &c.probs {
        out.push_str(&format!("{:016x}\t{}\n", key.hash, prob));
    }
    out
}

/// One row of a census-convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub k: usize,
    pub tv: f64,
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("n,seed,k,tv_distance\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.n, r.seed, r.k, r.tv));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_census_reports_its_cap() {
        let star: Vec<(usize, usize)> = (1..100).map(|i| (0, i)).collect();
        let g = AttributedGraph::structural(100, &star).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = neighborhood_census(&g, 1, false, 10, &mut rng).unwrap();
        assert!(!c.exhaustive);
        assert_eq!(c.samples, 10);
        let total: f64 = c.probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cap_is_rejected() {
        let g = AttributedGraph::structural(2, &[(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            neighborhood_census(&g, 1, false, 0, &mut rng),
            Err(LimitsError::BadParameter(_))
        ));
    }

    #[test]
    fn tsv_lines_are_tab_separated_and_sorted() {
        let g = AttributedGraph::structural(3, &[(0, 1), (1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = neighborhood_census(&g, 1, false, usize::MAX, &mut rng).unwrap();
        let tsv = census_tsv(&c);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), c.probs.len());
        let mut hashes = Vec::new();
        for line in lines {
            let (h, p) = line.split_once('\t').unwrap();
            assert_eq!(h.len(), 16);
            p.parse::<f64>().unwrap();
            hashes.push(u64::from_str_radix(h, 16).unwrap());
        }
        let mut sorted = hashes.clone();
        sorted.sort_unstable();
        assert_eq!(hashes, sorted);
    }

    #[test]
    fn convergence_csv_has_fixed_header() {
        let rows = [ConvergenceRow {
            n: 500,
            seed: 3,
            k: 1,
            tv: 0.25,
        }];
        let csv = convergence_csv(&rows);
        assert!(csv.starts_with("n,seed,k,tv_distance\n"));
        assert!(csv.contains("500,3,1,0.25"));
    }
}
