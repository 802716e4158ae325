//! Exact unbiasedness of the importance-corrected minibatch estimator: the
//! expectation over every possible batch equals the population mean, for
//! uniform batches by enumerating subsets and for weighted batches by
//! integrating over the single uniform that drives systematic sampling.

use ndarray::{array, Array2};

use gnnlab_engine::{estimate_gradient, GradientRecord};
use gnnlab_samplers::systematic_inclusion_sample;

fn record_for(v: usize) -> GradientRecord {
    let x = v as f64;
    GradientRecord {
        layers: vec![vec![array![[1.3 * x - 2.0, 0.7 * x * x, 1.0 / (x + 1.0)]]]],
        head: None,
        loss: 0.25 * x - 1.0,
    }
}

fn population_mean(m: usize) -> GradientRecord {
    let mut mean = GradientRecord {
        layers: vec![vec![Array2::zeros((1, 3))]],
        head: None,
        loss: 0.0,
    };
    for v in 0..m {
        mean.add_scaled(&record_for(v), 1.0 / m as f64);
    }
    mean
}

fn diff_norm(a: &GradientRecord, b: &GradientRecord) -> f64 {
    let mut d = a.clone();
    d.add_scaled(b, -1.0);
    d.norm().hypot(d.loss)
}

#[test]
fn uniform_batches_average_to_the_population_mean() {
    let m = 6;
    let b = 3;
    let mut expectation = GradientRecord {
        layers: vec![vec![Array2::zeros((1, 3))]],
        head: None,
        loss: 0.0,
    };
    let mut count = 0usize;
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                let recs = [record_for(i), record_for(j), record_for(k)];
                let est = estimate_gradient(&recs, &[1.0; 3]).unwrap();
                expectation.add_scaled(&est, 1.0);
                count += 1;
            }
        }
    }
    assert_eq!(count, 20);
    assert_eq!(b, 3);
    expectation.scale(1.0 / count as f64);
    let mean = population_mean(m);
    assert!(
        diff_norm(&expectation, &mean) < 1e-12,
        "uniform expectation off by {}",
        diff_norm(&expectation, &mean)
    );
}

/// Breakpoints of the systematic sampler in u-space: the certainty set never
/// depends on u, so one probe recovers it and the remaining cut points are
/// the surviving prefix sums modulo the stride.
fn u_cuts(weights: &[f64], k: usize) -> Vec<f64> {
    let mut cuts = vec![0.0, 1.0];
    let probe = systematic_inclusion_sample(weights, k, 0.0);
    let certain: Vec<usize> = probe
        .iter()
        .filter(|&&(_, p)| p == 1.0)
        .map(|&(i, _)| i)
        .collect();
    let rest: Vec<usize> = (0..weights.len())
        .filter(|i| weights[*i] > 0.0 && !certain.contains(i))
        .collect();
    let k_rem = k.min(certain.len() + rest.len()) - certain.len();
    if k_rem > 0 {
        let total: f64 = rest.iter().map(|&i| weights[i]).sum();
        let stride = total / k_rem as f64;
        let mut cum = 0.0;
        for &i in &rest {
            cum += weights[i];
            cuts.push((cum / stride).fract());
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts
}

#[test]
fn weighted_batches_average_to_the_population_mean() {
    for (weights, k) in [
        (vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0], 3usize),
        (vec![10.0, 1.0, 1.0, 1.0, 1.0], 2),
        (vec![2.0, 2.0, 2.0, 2.0], 2),
    ] {
        let m = weights.len();
        let cuts = u_cuts(&weights, k);
        let mut expectation = GradientRecord {
            layers: vec![vec![Array2::zeros((1, 3))]],
            head: None,
            loss: 0.0,
        };
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let mid = (lo + hi) / 2.0;
            let picks = systematic_inclusion_sample(&weights, k, mid);
            assert_eq!(picks.len(), k);
            let recs: Vec<GradientRecord> =
                picks.iter().map(|&(i, _)| record_for(i)).collect();
            let est_weights: Vec<f64> = picks
                .iter()
                .map(|&(_, pi)| pi * m as f64 / k as f64)
                .collect();
            let est = estimate_gradient(&recs, &est_weights).unwrap();
            expectation.add_scaled(&est, hi - lo);
        }
        let mean = population_mean(m);
        assert!(
            diff_norm(&expectation, &mean) < 1e-10,
            "weighted expectation for {weights:?} k={k} off by {}",
            diff_norm(&expectation, &mean)
        );
    }
}
