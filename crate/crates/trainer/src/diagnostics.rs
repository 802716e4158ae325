//! Post-training diagnostics tying finite runs to their limit behavior.

use gnnlab_engine::{ModelParams, OutputMap};
use gnnlab_graph::AttributedGraph;

use crate::config::{LossKind, TrainConfig};
use crate::error::TrainError;
use crate::runner::{full_gradient_norm_over, train_dispatch};

/// Norm of the full-batch classification gradient over every labeled node
/// of `g`, with untruncated neighborhoods and no sampling. The whole-graph
/// objective averages over all of the graph, not just the train split, so
/// evaluating this on the source graph for parameters trained on subgraphs
/// measures how far they sit from a critical point of that objective.
pub fn limit_gradient_check(
    params: &ModelParams,
    g: &AttributedGraph,
) -> Result<f64, TrainError> {
    if params.output != OutputMap::LogSoftmax {
        return Err(TrainError::BadConfig(
            "the full-batch gradient norm is defined for log_softmax classifiers".into(),
        ));
    }
    let labeled: Vec<usize> = (0..g.node_count()).filter(|&v| g.label(v) >= 0).collect();
    if labeled.is_empty() {
        return Err(TrainError::BadConfig(
            "the graph has no labeled nodes to take the full gradient over".into(),
        ));
    }
    full_gradient_norm_over(params, g, &labeled)
}

/// Stopping times of one seed's trajectory across every threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedScaling {
    pub seed: u64,
    /// Epochs until the smoothed gradient norm first reached `epsilons[i]`.
    pub t_star: Vec<usize>,
    /// True where the run hit max epochs first; the matching `t_star` entry
    /// is the max-epoch floor, a lower bound on the true stopping time.
    pub censored: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonScalingReport {
    pub epsilons: Vec<f64>,
    pub runs: Vec<SeedScaling>,
    /// Mean stopping time per threshold over seeds (censored floors included).
    pub mean_t_star: Vec<f64>,
    /// Sample standard deviation per threshold over seeds.
    pub std_t_star: Vec<f64>,
    /// Least-squares slope of ln(mean t*) against ln(1/eps) over thresholds
    /// no seed censored; informational only.
    pub loglog_slope: Option<f64>,
    pub any_censored: bool,
}

/// Measures how the stopping time grows as the threshold shrinks.
///
/// The threshold only enters training through the stop rule, so one run per
/// seed with early stopping disabled carries every stopping time: t*(eps) is
/// read off the recorded trajectory exactly as a run with that eps would
/// have stopped. Per-seed monotonicity (smaller eps never stops earlier) is
/// asserted, not just reported.
pub fn epsilon_scaling_report(
    g: &AttributedGraph,
    params_init: impl Fn(u64) -> ModelParams,
    cfg: &TrainConfig,
    epsilons: &[f64],
    seeds: &[u64],
) -> Result<EpsilonScalingReport, TrainError> {
    if epsilons.is_empty() {
        return Err(TrainError::BadConfig("need at least one threshold".into()));
    }
    if epsilons.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(TrainError::BadConfig(
            "scaling thresholds must be positive and finite".into(),
        ));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(TrainError::BadConfig(
            "scaling thresholds must be strictly decreasing".into(),
        ));
    }
    if seeds.len() < 5 {
        return Err(TrainError::BadConfig(format!(
            "stopping-time means need at least 5 seeds, got {}",
            seeds.len()
        )));
    }
    if cfg.loss != LossKind::Nll {
        return Err(TrainError::BadConfig(
            "stopping-time scaling is defined for the classification loss".into(),
        ));
    }

    let mut runs = Vec::with_capacity(seeds.len());
    let mut any_censored = false;
    for &seed in seeds {
        let params0 = params_init(seed);
        let mut run_cfg = cfg.clone();
        run_cfg.seed = seed;
        run_cfg.epsilon = 0.0;
        let outcome = train_dispatch(g, &params0, &run_cfg)?;
        let metrics = &outcome.metrics;
        let init_norm = metrics.initial_grad_norm.ok_or_else(|| {
            TrainError::Diagnostic("classification run recorded no initial gradient norm".into())
        })?;

        let mut t_star = Vec::with_capacity(epsilons.len());
        let mut censored = Vec::with_capacity(epsilons.len());
        for &eps in epsilons {
            if init_norm <= eps {
                t_star.push(0);
                censored.push(false);
                continue;
            }
            match metrics
                .rows
                .iter()
                .position(|r| r.grad_norm_ema <= eps)
            {
                Some(r) => {
                    t_star.push(r + 1);
                    censored.push(false);
                }
                None => {
                    t_star.push(metrics.rows.len());
                    censored.push(true);
                }
            }
        }
        if t_star.windows(2).any(|w| w[1] < w[0]) {
            return Err(TrainError::Diagnostic(format!(
                "stopping times decreased as the threshold shrank for seed {seed}: {t_star:?}"
            )));
        }
        any_censored |= censored.iter().any(|&c| c);
        runs.push(SeedScaling { seed, t_star, censored });
    }

    let n = runs.len() as f64;
    let mut mean_t_star = Vec::with_capacity(epsilons.len());
    let mut std_t_star = Vec::with_capacity(epsilons.len());
    for i in 0..epsilons.len() {
        let mean = runs.iter().map(|r| r.t_star[i] as f64).sum::<f64>() / n;
        let var = runs
            .iter()
            .map(|r| (r.t_star[i] as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        mean_t_star.push(mean);
        std_t_star.push(var.sqrt());
    }

    let points: Vec<(f64, f64)> = epsilons
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            runs.iter().all(|r| !r.censored[i]) && mean_t_star[i] >= 1.0
        })
        .map(|(i, &eps)| ((1.0 / eps).ln(), mean_t_star[i].ln()))
        .collect();
    let loglog_slope = least_squares_slope(&points);

    Ok(EpsilonScalingReport {
        epsilons: epsilons.to_vec(),
        runs,
        mean_t_star,
        std_t_star,
        loglog_slope,
        any_censored,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
