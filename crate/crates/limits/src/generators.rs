//! Random graph families used as census and training fixtures.

use gnnlab_graph::AttributedGraph;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::LimitsError;

/// Maps a linear index over the pairs `(i, j)` with `i < j < n`, ordered by
/// `i` then `j`, back to the pair.
fn pair_from_index(n: u64, t: u64) -> (u64, u64) {
    let start = |i: u64| i * (n - 1) - i * i.saturating_sub(1) / 2;
    let nf = n as f64;
    let guess = nf - 0.5 - ((nf - 0.5) * (nf - 0.5) - 2.0 * t as f64).max(0.0).sqrt();
    let mut i = guess.max(0.0).floor() as u64;
    while i > 0 && start(i) > t {
        i -= 1;
    }
    while start(i + 1) <= t {
        i += 1;
    }
    (i, i + 1 + (t - start(i)))
}

/// Erdos-Renyi graph with edge probability `lambda / n`, so node degrees
/// are asymptotically Poisson(`lambda`). Pairs are visited with geometric
/// skips, so the cost scales with the number of edges drawn.
pub fn gen_erdos_renyi(
    n: usize,
    lambda: f64,
    rng: &mut impl Rng,
) -> Result<AttributedGraph, LimitsError> {
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(LimitsError::BadParameter(format!(
            "mean degree must be finite and non-negative, got {lambda}"
        )));
    }

    let p = (lambda / n as f64).min(1.0);
    let total = n as u64 * (n as u64 - 1) / 2;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    if p >= 1.0 {
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
    } else if p > 0.0 {
        let ln_q = (1.0 - p).ln();
        let mut cursor: i128 = -1;
        loop {
            let u = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / ln_q).floor() as i128;
            cursor += skip + 1;
            if cursor >= total as i128 {
                break;
            }
            let (i, j) = pair_from_index(n as u64, cursor as u64);
            edges.push((i as usize, j as usize));
        }
    }
    Ok(AttributedGraph::structural(n, &edges)?)
}

/// Configuration model with erased self-loops and parallel edges: stubs are
/// matched uniformly and the multigraph is collapsed to a simple graph.
pub fn gen_config_model(
    degrees: &[usize],
    rng: &mut impl Rng,
) -> Result<AttributedGraph, LimitsError> {
    if degrees.is_empty() {
        return Err(LimitsError::EmptyGraph);
    }
    let sum: usize = degrees.iter().sum();
    if sum % 2 == 1 {
        return Err(LimitsError::OddStubSum { sum });
    }

    let mut stubs: Vec<u32> = Vec::with_capacity(sum);
    for (v, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat(v as u32).take(d));
    }
    stubs.shuffle(rng);
    let edges: Vec<(usize, usize)> = stubs
        .chunks_exact(2)
        .map(|c| (c[0] as usize, c[1] as usize))
        .collect();
    Ok(AttributedGraph::structural(degrees.len(), &edges)?)
}

/// Preferential attachment: each arriving node attaches `m` edges to
/// distinct earlier nodes chosen proportionally to their current degree.
pub fn gen_pref_attachment(
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Result<AttributedGraph, LimitsError> {
    if n == 0 {
        return Err(LimitsError::EmptyGraph);
    }
    if m == 0 {
        return Err(LimitsError::BadParameter(
            "each arriving node must attach at least one edge".into(),
        ));
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut endpoints: Vec<u32> = Vec::new();
    for v in 1..n {
        if v <= m {
            for t in 0..v {
                edges.push((v, t));
                endpoints.push(v as u32);
                endpoints.push(t as u32);
            }
        } else {
            let mut targets: Vec<u32> = Vec::with_capacity(m);
            while targets.len() < m {
                let t = endpoints[rng.random_range(0..endpoints.len())];
                if t != v as u32 && !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for &t in &targets {
                edges.push((v, t as usize));
                endpoints.push(v as u32);
                endpoints.push(t);
            }
        }
    }
    Ok(AttributedGraph::structural(n, &edges)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_indexing_enumerates_the_triangle() {
        let n = 7u64;
        let mut expected = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                expected.push((i, j));
            }
        }
        let got: Vec<(u64, u64)> = (0..expected.len() as u64)
            .map(|t| pair_from_index(n, t))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn er_mean_degree_tracks_lambda() {
        let n = 1000;
        let mut mean = 0.0;
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = gen_erdos_renyi(n, 3.0, &mut rng).unwrap();
            mean += 2.0 * g.edge_count() as f64 / n as f64;
        }
        mean /= 5.0;
        assert!((mean - 3.0).abs() < 0.2, "mean degree {mean}");
    }

    #[test]
    fn er_extremes_are_empty_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = gen_erdos_renyi(50, 0.0, &mut rng).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let complete = gen_erdos_renyi(6, 6.0, &mut rng).unwrap();
        assert_eq!(complete.edge_count(), 15);
    }

    #[test]
    fn config_model_erasure_keeps_most_degrees() {
        let degrees = vec![2usize; 200];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gen_config_model(&degrees, &mut rng).unwrap();
        let intact = (0..200).filter(|&v| g.degree(v) == 2).count();
        assert!(intact >= 190, "only {intact} nodes kept degree 2");
    }

    #[test]
    fn odd_stub_sum_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            gen_config_model(&[1, 2], &mut rng),
            Err(LimitsError::OddStubSum { sum: 3 })
        ));
    }

    #[test]
    fn single_attachment_grows_a_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = gen_pref_attachment(5, 1, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 4);
        let reach = gnnlab_graph::bfs_ball(&g, 0, 4).unwrap();
        assert_eq!(reach.node_count(), 5);
    }
}
