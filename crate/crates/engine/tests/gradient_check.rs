//! Finite-difference validation of the reverse pass across architectures,
//! losses and samplers.

use ndarray::Array2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use gnnlab_engine::{
    finite_diff_check, Architecture, LossTarget, ModelParams, OutputMap,
};
use gnnlab_graph::{AttributedGraph, FeatureMatrix};
use gnnlab_samplers::{
    fastgcn_computational_graph, full_computational_graph_batch, sage_computational_graph,
    shadow_extract, ShadowInner,
};

fn random_graph(n: usize, p: f64, dim: usize, classes: usize, seed: u64) -> AttributedGraph {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let mut dense = Array2::zeros((n, dim));
    for v in 0..n {
        for j in 0..dim {
            if rng.random_bool(0.6) {
                dense[[v, j]] = rng.random_range(-1.0..1.0);
            }
        }
    }
    let labels = (0..n).map(|_| rng.random_range(0..classes) as i64).collect();
    AttributedGraph::from_edges(
        n,
        &edges,
        FeatureMatrix::from_dense(&dense),
        labels,
        vec![true; n],
        vec![false; n],
        vec![false; n],
    )
    .unwrap()
}

const ARCHS: [Architecture; 3] = [Architecture::Gcn, Architecture::Sage, Architecture::Gin];

#[test]
fn analytic_gradients_match_central_differences_for_nll() {
    let mut rng = StdRng::seed_from_u64(21);
    let g = random_graph(12, 0.3, 3, 2, 500);
    let seeds = [0usize, 5, 9];
    let labels: Vec<i64> = seeds.iter().map(|&v| g.label(v)).collect();
    let cg = full_computational_graph_batch(&g, &seeds, 2).unwrap();
    for &arch in &ARCHS {
        let params =
            ModelParams::new(arch, 3, &[3, 2], Some(2), OutputMap::LogSoftmax, &mut rng);
        let report = finite_diff_check(
            &params,
            &cg,
            g.features(),
            &LossTarget::Nll { labels: &labels },
            1e-4,
        )
        .unwrap();
        assert!(report.checked > 0);
        assert!(
            report.max_rel_error <= 1e-4,
            "{arch:?} nll: rel error {} at {:?}",
            report.max_rel_error,
            report.worst
        );
    }
}

#[test]
fn analytic_gradients_match_central_differences_for_negsample() {
    let mut rng = StdRng::seed_from_u64(22);
    let g = random_graph(12, 0.3, 3, 2, 501);
    let seeds = [1usize, 4, 8, 11];
    let cg = full_computational_graph_batch(&g, &seeds, 2).unwrap();
    let pairs = [(0usize, 1usize), (2, 3)];
    let negatives = vec![vec![2], vec![0, 1]];
    for &arch in &ARCHS {
        let params = ModelParams::new(arch, 3, &[3, 2], None, OutputMap::Identity, &mut rng);
        let report = finite_diff_check(
            &params,
            &cg,
            g.features(),
            &LossTarget::NegSample { pairs: &pairs, negatives: &negatives },
            1e-4,
        )
        .unwrap();
        assert!(report.checked > 0);
        assert!(
            report.max_rel_error <= 1e-4,
            "{arch:?} negsample: rel error {} at {:?}",
            report.max_rel_error,
            report.worst
        );
    }
}

#[test]
fn gradients_hold_on_sampled_computational_graphs() {
    let mut model_rng = StdRng::seed_from_u64(23);
    let mut samp_rng = StdRng::seed_from_u64(24);
    let g = random_graph(14, 0.35, 3, 2, 502);

    let sage_cg = sage_computational_graph(&g, 3, &[2, 2], &mut samp_rng).unwrap();
    let fast_cg =
        fastgcn_computational_graph(&g, &[2, 7], &[4, 3], &mut samp_rng).unwrap();
    let shadow_cg = shadow_extract(
        &g,
        &[1, 6],
        2,
        &ShadowInner::Sage { fanouts: vec![2, 2] },
        &mut samp_rng,
    )
    .unwrap();

    for (name, cg) in [("sage", &sage_cg), ("fastgcn", &fast_cg), ("shadow", &shadow_cg)] {
        let labels: Vec<i64> = cg.seeds.iter().map(|&v| g.label(v)).collect();
        for &arch in &ARCHS {
            let params = ModelParams::new(
                arch,
                3,
                &[3, 2],
                Some(2),
                OutputMap::LogSoftmax,
                &mut model_rng,
            );
            let report = finite_diff_check(
                &params,
                cg,
                g.features(),
                &LossTarget::Nll { labels: &labels },
                1e-4,
            )
            .unwrap();
            assert!(report.checked > 0);
            assert!(
                report.max_rel_error <= 1e-4,
                "{arch:?} over {name}: rel error {} at {:?}",
                report.max_rel_error,
                report.worst
            );
        }
    }
}

#[test]
fn smooth_fixture_meets_tight_tolerance() {
    // All-positive weights and features keep every relu strictly active, so
    // the loss is smooth along every coordinate and the quadratic error term
    // of the central difference dominates.
    let mut rng = StdRng::seed_from_u64(25);
    let g = {
        let n = 8;
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (1, 5)];
        let mut dense = Array2::zeros((n, 3));
        for v in 0..n {
            for j in 0..3 {
                dense[[v, j]] = 0.2 + ((v * 3 + j) % 5) as f64 * 0.15;
            }
        }
        AttributedGraph::from_edges(
            n,
            &edges,
            FeatureMatrix::from_dense(&dense),
            vec![0, 1, 0, 1, 0, 1, 0, 1],
            vec![true; n],
            vec![false; n],
            vec![false; n],
        )
        .unwrap()
    };
    for &arch in &ARCHS {
        let mut params =
            ModelParams::new(arch, 3, &[3, 2], Some(2), OutputMap::LogSoftmax, &mut rng);
        for layer in &mut params.layers {
            for m in &mut layer.mats {
                m.mapv_inplace(|x| x.abs() + 0.05);
            }
        }
        if let Some(h) = &mut params.head {
            h.mapv_inplace(|x| x.abs() + 0.05);
        }
        let seeds = [0usize, 3, 6];
        let labels: Vec<i64> = seeds.iter().map(|&v| g.label(v)).collect();
        let cg = full_computational_graph_batch(&g, &seeds, 2).unwrap();
        let report = finite_diff_check(
            &params,
            &cg,
            g.features(),
            &LossTarget::Nll { labels: &labels },
            1e-4,
        )
        .unwrap();
        assert_eq!(report.skipped_kinks, 0, "{arch:?} fixture touched a kink");
        assert!(
            report.max_rel_error <= 1e-7,
            "{arch:?} smooth fixture: rel error {}",
            report.max_rel_error
        );
    }
}
