//! Local distance between rooted balls.
//!
//! Two balls at distance `1/(1 + k)` first disagree at truncation radius
//! `k`; balls that agree at every radius up to `k_max` score 0, which only
//! certifies the true distance is at most `1/(1 + k_max)`.

use gnnlab_graph::RootedBall;

use crate::error::LimitsError;
use crate::signature::{ball_signature, DEFAULT_FEATURE_BITS};

#[derive(Debug, Clone, PartialEq)]
pub struct DLocResult {
    /// 0 when no disagreement was found, otherwise `1/(1 + k*)`.
    pub distance: f64,
    /// Certified upper bound on the true distance; equals `distance` when a
    /// disagreement was found and `1/(1 + k_max)` otherwise.
    pub bound: f64,
    /// Smallest radius at which the balls disagree, when one was found.
    pub first_divergence: Option<usize>,
    /// True when every comparison used exact canonical encodings rather
    /// than hashes.
    pub exact: bool,
}

/// Compares structural ball signatures radius by radius.
///
/// Both balls must have been extracted with radius at least `k_max`.
pub fn d_loc(
    a: &RootedBall,
    b: &RootedBall,
    k_max: usize,
) -> Result<DLocResult, LimitsError> {
    for (side, ball) in [("first", a), ("second", b)] {
        if ball.radius < k_max {
            return Err(LimitsError::BadParameter(format!(
                "{side} ball has radius {} but the comparison needs {k_max}",
                ball.radius
            )));
        }
    }

    let mut exact = true;
    for k in 0..=k_max {
        let sa = ball_signature(&a.truncate(k), false, DEFAULT_FEATURE_BITS);
        let sb = ball_signature(&b.truncate(k), false, DEFAULT_FEATURE_BITS);
        let (same, this_exact) = match (&sa.exact, &sb.exact) {
            (Some(ea), Some(eb)) => (ea == eb, true),
            _ => (sa.hash == sb.hash, false),
        };
        exact &= this_exact;
        if !same {
            let distance = 1.0 / (1.0 + k as f64);
            return Ok(DLocResult {
                distance,
                bound: distance,
                first_divergence: Some(k),
                exact,
            });
        }
    }

    Ok(DLocResult {
        distance: 0.0,
        bound: 1.0 / (1.0 + k_max as f64),
        first_divergence: None,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gnnlab_graph::{bfs_ball, AttributedGraph};

    fn path(n: usize) -> AttributedGraph {
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        AttributedGraph::structural(n, &edges).unwrap()
    }

    #[test]
    fn identical_balls_are_at_distance_zero() {
        let g = path(4);
        let b = bfs_ball(&g, 0, 3).unwrap();
        let r = d_loc(&b, &b, 3).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.first_divergence, None);
        assert_eq!(r.bound, 0.25);
        assert!(r.exact);
    }

    #[test]
    fn root_degree_mismatch_scores_one_half() {
        let p2 = path(2);
        let p3 = path(3);
        let deg1 = bfs_ball(&p2, 0, 1).unwrap();
        let deg2 = bfs_ball(&p3, 1, 1).unwrap();
        let r = d_loc(&deg1, &deg2, 1).unwrap();
        assert_eq!(r.distance, 0.5);
        assert_eq!(r.first_divergence, Some(1));
        let rev = d_loc(&deg2, &deg1, 1).unwrap();
        assert_eq!(rev.distance, r.distance);
    }

    #[test]
    fn path_ends_diverge_at_the_far_endpoint() {
        let p4 = path(4);
        let p5 = path(5);
        let a = bfs_ball(&p4, 0, 4).unwrap();
        let b = bfs_ball(&p5, 0, 4).unwrap();
        let r = d_loc(&a, &b, 4).unwrap();
        assert_eq!(r.distance, 0.2);
        assert_eq!(r.first_divergence, Some(4));
        assert!(r.exact);

        let shallow = d_loc(&a, &b, 3).unwrap();
        assert_eq!(shallow.distance, 0.0);
        assert_eq!(shallow.bound, 0.25);
    }

    #[test]
    fn values_stay_on_the_harmonic_grid() {
        let graphs = [path(2), path(3), path(5), path(6)];
        let mut balls = Vec::new();
        for g in &graphs {
            for root in 0..g.node_count() {
                balls.push(bfs_ball(g, root, 2).unwrap());
            }
        }
        for x in &balls {
            for y in &balls {
                let r = d_loc(x, y, 2).unwrap();
                let grid = [0.0, 1.0, 0.5, 1.0 / 3.0];
                assert!(grid.iter().any(|&v| (r.distance - v).abs() < 1e-15));
                let sym = d_loc(y, x, 2).unwrap();
                assert_eq!(sym.distance, r.distance);
            }
        }
    }

    #[test]
    fn shallow_extraction_is_rejected() {
        let g = path(3);
        let b = bfs_ball(&g, 0, 1).unwrap();
        assert!(matches!(
            d_loc(&b, &b, 2),
            Err(LimitsError::BadParameter(_))
        ));
    }
}
