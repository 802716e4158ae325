//! Almost-local estimators and the locality profiles that justify them.

use gnnlab_graph::AttributedGraph;
use ndarray::Array2;
use rand::Rng;

use crate::error::LimitsError;

/// Law of the second endpoint in a negative-sampling pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseDistribution {
    Uniform,
    DegreeProportional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegSampleEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Monte-Carlo estimate of `E[sigma(<emb_v, emb_u>)]` with `v` uniform and
/// `u` drawn from `noise`.
pub fn negsample_estimate(
    g: &AttributedGraph,
    emb: &Array2<f64>,
    noise: NoiseDistribution,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<NegSampleEstimate, LimitsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }
    if emb.nrows() != n {
        return Err(LimitsError::BadParameter(format!(
            "embedding matrix has {} rows for {n} nodes",
            emb.nrows()
        )));
    }
    if trials == 0 {
        return Err(LimitsError::BadParameter(
            "trial count must be positive".into(),
        ));
    }

    let stubs: Option<Vec<u32>> = match noise {
        NoiseDistribution::Uniform => None,
        NoiseDistribution::DegreeProportional => {
            if g.edge_count() == 0 {
                return Err(LimitsError::EdgelessGraph);
            }
            let mut s = Vec::with_capacity(2 * g.edge_count());
            for v in 0..n {
                s.extend(std::iter::repeat(v as u32).take(g.degree(v)));
            }
            Some(s)
        }
    };

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..trials {
        let v = rng.random_range(0..n);
        let u = match &stubs {
            None => rng.random_range(0..n),
            Some(s) => s[rng.random_range(0..s.len())] as usize,
        };
        let score = emb.row(v).dot(&emb.row(u));
        let val = sigmoid(score);
        sum += val;
        sumsq += val * val;
    }

    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 {
        ((sumsq - sum * sum / t) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(NegSampleEstimate {
        mean,
        std_error: (var / t).sqrt(),
        trials,
    })
}

/// Evaluates `(1/n) sum_v g(v) deg(v) / mean_degree`, the size-biased mean
/// of `g`. Constant functions are reproduced exactly.
pub fn degree_normalized_estimate(
    g: &AttributedGraph,
    values: &[f64],
) -> Result<f64, LimitsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }
    if values.len() != n {
        return Err(LimitsError::BadParameter(format!(
            "got {} values for {n} nodes",
            values.len()
        )));
    }
    if g.edge_count() == 0 {
        return Err(LimitsError::EdgelessGraph);
    }

    let weighted: f64 = (0..n).map(|v| values[v] * g.degree(v) as f64).sum();
    Ok(weighted / (2.0 * g.edge_count() as f64))
}

fn ball_members(g: &AttributedGraph, root: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    out.push(root);
    let mut seen = vec![false; g.node_count()];
    seen[root] = true;
    let mut head = 0;
    let mut depth_edge = out.len();
    let mut depth = 0;
    while head < out.len() && depth < k {
        let v = out[head];
        head += 1;
        for &u in g.neighbors(v) {
            let u = u as usize;
            if !seen[u] {
                seen[u] = true;
                out.push(u);
            }
        }
        if head == depth_edge {
            depth += 1;
            depth_edge = out.len();
        }
    }
}

/// For each threshold, the fraction of nodes whose `k`-ball contains a node
/// of full-graph degree strictly above the threshold.
pub fn uniform_integrability_profile(
    g: &AttributedGraph,
    k: usize,
    thresholds: &[usize],
) -> Result<Vec<(usize, f64)>, LimitsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }

    let mut ball_max = vec![0usize; n];
    let mut members = Vec::new();
    for v in 0..n {
        ball_members(g, v, k, &mut members);
        ball_max[v] = members.iter().map(|&u| g.degree(u)).max().unwrap_or(0);
    }

    Ok(thresholds
        .iter()
        .map(|&delta| {
            let over = ball_max.iter().filter(|&&m| m > delta).count();
            (delta, over as f64 / n as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisjointBallReport {
    /// Empirical probability that the balls of a uniformly drawn batch are
    /// pairwise disjoint.
    pub disjoint_probability: f64,
    /// Analytic bound `min(1, batch^2 max_deg^k / n)` on the overlap
    /// probability.
    pub overlap_bound: f64,
    pub trials: usize,
}

/// Estimates how often the `k`-balls of a uniformly drawn batch of distinct
/// nodes stay pairwise disjoint.
pub fn disjoint_ball_probability(
    g: &AttributedGraph,
    batch: usize,
    k: usize,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<DisjointBallReport, LimitsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }
    if batch == 0 || batch > n {
        return Err(LimitsError::BadParameter(format!(
            "batch size {batch} is outside 1..={n}"
        )));
    }
    if trials == 0 {
        return Err(LimitsError::BadParameter(
            "trial count must be positive".into(),
        ));
    }

    let max_deg = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
    let overlap_bound =
        ((batch * batch) as f64 * (max_deg as f64).powi(k as i32) / n as f64).min(1.0);

    let mut stamp = vec![usize::MAX; n];
    let mut members = Vec::new();
    let mut disjoint = 0usize;
    for trial in 0..trials {
        let roots = rand::seq::index::sample(rng, n, batch);
        let mut clean = true;
        'roots: for root in roots {
            ball_members(g, root, k, &mut members);
            for &u in &members {
                if stamp[u] == trial {
                    clean = false;
                    break 'roots;
                }
                stamp[u] = trial;
            }
        }
        if clean {
            disjoint += 1;
        }
    }

    Ok(DisjointBallReport {
        disjoint_probability: disjoint as f64 / trials as f64,
        overlap_bound,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn complete(n: usize) -> AttributedGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        AttributedGraph::structural(n, &edges).unwrap()
    }

    fn star(leaves: usize) -> AttributedGraph {
        let edges: Vec<(usize, usize)> = (0..leaves).map(|i| (0, i + 1)).collect();
        AttributedGraph::structural(leaves + 1, &edges).unwrap()
    }

    #[test]
    fn zero_embeddings_score_exactly_one_half() {
        let g = complete(6);
        let emb = Array2::zeros((6, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est =
            negsample_estimate(&g, &emb, NoiseDistribution::Uniform, 500, &mut rng).unwrap();
        assert!((est.mean - 0.5).abs() < 1e-12);
        assert!(est.std_error < 1e-12);
    }

    #[test]
    fn unit_embeddings_score_sigma_of_one() {
        let g = complete(5);
        let emb = Array2::ones((5, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let est =
            negsample_estimate(&g, &emb, NoiseDistribution::Uniform, 300, &mut rng).unwrap();
        assert!((est.mean - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn balanced_communities_average_to_one_half() {
        let g = complete(10);
        let mut emb = Array2::zeros((10, 1));
        for v in 0..10 {
            emb[[v, 0]] = if v < 5 { 1.0 } else { -1.0 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est =
            negsample_estimate(&g, &emb, NoiseDistribution::Uniform, 20_000, &mut rng)
                .unwrap();
        assert!((est.mean - 0.5).abs() < 0.02, "mean {}", est.mean);
        assert!(est.std_error > 0.0 && est.std_error < 0.01);
    }

    #[test]
    fn degree_noise_needs_edges() {
        let g = AttributedGraph::structural(3, &[]).unwrap();
        let emb = Array2::zeros((3, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            negsample_estimate(&g, &emb, NoiseDistribution::DegreeProportional, 10, &mut rng),
            Err(LimitsError::EdgelessGraph)
        ));
        assert!(
            negsample_estimate(&g, &emb, NoiseDistribution::Uniform, 10, &mut rng).is_ok()
        );
    }

    #[test]
    fn size_biased_mean_is_exact_on_constants_and_stars() {
        let g = star(3);
        let center_indicator = [1.0, 0.0, 0.0, 0.0];
        let est = degree_normalized_estimate(&g, &center_indicator).unwrap();
        assert!((est - 0.5).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let random = crate::generators::gen_erdos_renyi(40, 4.0, &mut rng).unwrap();
        let constant = vec![0.7; 40];
        let est = degree_normalized_estimate(&random, &constant).unwrap();
        assert!((est - 0.7).abs() < 1e-12);

        let lonely = AttributedGraph::structural(4, &[]).unwrap();
        assert!(matches!(
            degree_normalized_estimate(&lonely, &[1.0; 4]),
            Err(LimitsError::EdgelessGraph)
        ));
    }

    #[test]
    fn integrability_profile_tracks_max_ball_degree() {
        let k4 = complete(4);
        let profile = uniform_integrability_profile(&k4, 1, &[2, 4]).unwrap();
        assert_eq!(profile, vec![(2, 1.0), (4, 0.0)]);

        let hub = star(9);
        let profile = uniform_integrability_profile(&hub, 1, &[5]).unwrap();
        assert_eq!(profile, vec![(5, 1.0)]);
    }

    #[test]
    fn dense_graph_balls_always_collide() {
        let g = complete(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = disjoint_ball_probability(&g, 2, 1, 200, &mut rng).unwrap();
        assert_eq!(report.disjoint_probability, 0.0);
    }

    #[test]
    fn perfect_matching_balls_rarely_collide() {
        let edges: Vec<(usize, usize)> = (0..10).map(|i| (2 * i, 2 * i + 1)).collect();
        let g = AttributedGraph::structural(20, &edges).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = disjoint_ball_probability(&g, 2, 1, 100_000, &mut rng).unwrap();
        let exact = 18.0 / 19.0;
        assert!(
            (report.disjoint_probability - exact).abs() < 0.01,
            "got {}",
            report.disjoint_probability
        );
        assert!((report.overlap_bound - 0.2).abs() < 1e-15);
        assert!(1.0 - report.disjoint_probability <= report.overlap_bound);

        let single = disjoint_ball_probability(&g, 1, 1, 50, &mut rng).unwrap();
        assert_eq!(single.disjoint_probability, 1.0);
    }
}
