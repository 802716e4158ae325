//! Minibatch training loops over whole graphs and sampled subgraphs.
//!
//! Both entry points drive the same loop; the only difference is where each
//! epoch's training graph comes from. A whole-graph draw consumes no
//! randomness, so a subgraph run whose node budget covers the source graph
//! replays a whole-graph run byte for byte.

use std::collections::HashMap;
use std::time::Instant;

use gnnlab_engine::{
    backward, backward_from_outputs, estimate_gradient, forward, full_graph_forward,
    negsample_loss, nll_loss, sgd_step, AdamState, GradientRecord, LossTarget, ModelParams,
    OutputMap,
};
use gnnlab_graph::{bfs_subgraph, AttributedGraph, Split, Subgraph};
use gnnlab_samplers::{
    fastgcn_computational_graph, full_computational_graph_batch, sage_computational_graph,
    sample_minibatch, shadow_extract, CompSampler, ComputationalGraph, Minibatch,
    SubgraphSampler,
};
use ndarray::{s, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{LossKind, Optimizer, TrainConfig};
use crate::error::TrainError;
use crate::metrics::{EpochRow, RunMetrics, StopReason};

/// Stream of the run RNG that feeds subgraph draws.
const DRAW_STREAM: u64 = 1;
/// Stream of the run RNG that feeds minibatch and neighbor sampling.
const TRAIN_STREAM: u64 = 2;

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    /// Fraction of split nodes whose argmax output matches the label; ties
    /// resolve to the lowest class index.
    pub accuracy: f64,
    /// Mean negative log-likelihood, present when the model emits
    /// log-probabilities.
    pub mean_loss: Option<f64>,
}

/// Trains on the source graph itself. Rejects configurations that ask for
/// subgraph draws.
pub fn train_full(
    g: &AttributedGraph,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if cfg.sampler.subgraph_sampler != SubgraphSampler::WholeGraph {
        return Err(TrainError::BadConfig(
            "whole-graph training requires the whole_graph subgraph sampler".into(),
        ));
    }
    run_loop(g, params.clone(), cfg)
}

/// Trains on truncated-BFS subgraphs redrawn every `resample_interval`
/// epochs. Rejects whole-graph configurations.
pub fn train_on_subgraphs(
    g: &AttributedGraph,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if !matches!(cfg.sampler.subgraph_sampler, SubgraphSampler::Bfs { .. }) {
        return Err(TrainError::BadConfig(
            "subgraph training requires the bfs subgraph sampler".into(),
        ));
    }
    run_loop(g, params.clone(), cfg)
}

/// Dispatches on the configured subgraph sampler.
pub(crate) fn train_dispatch(
    g: &AttributedGraph,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    match cfg.sampler.subgraph_sampler {
        SubgraphSampler::WholeGraph => train_full(g, params, cfg),
        SubgraphSampler::Bfs { .. } => train_on_subgraphs(g, params, cfg),
    }
}

/// Accuracy (and mean NLL for log-probability models) of `params` on one
/// split, evaluated with untruncated neighborhoods.
pub fn evaluate(
    params: &ModelParams,
    g: &AttributedGraph,
    split: Split,
) -> Result<EvalReport, TrainError> {
    let nodes = g.split_nodes(split);
    if nodes.is_empty() {
        return Err(TrainError::EmptySplit(split_name(split)));
    }
    let outputs = full_graph_forward(params, g)?;
    Ok(eval_on(&outputs, g, &nodes, params.output))
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Val => "val",
        Split::Test => "test",
    }
}

fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn eval_on(
    outputs: &Array2<f64>,
    g: &AttributedGraph,
    nodes: &[usize],
    output: OutputMap,
) -> EvalReport {
    let mut correct = 0usize;
    let mut nll = 0.0;
    let mut labeled = 0usize;
    for &v in nodes {
        let y = g.label(v);
        if argmax(outputs.row(v)) as i64 == y {
            correct += 1;
        }
        if y >= 0 && (y as usize) < outputs.ncols() {
            nll -= outputs[[v, y as usize]];
            labeled += 1;
        }
    }
    let mean_loss = if output == OutputMap::LogSoftmax && labeled > 0 {
        Some(nll / labeled as f64)
    } else {
        None
    };
    EvalReport { accuracy: correct as f64 / nodes.len() as f64, mean_loss }
}

/// Norm of the full-batch classification gradient over the train split,
/// with no sampling anywhere. This is the reference the stopping threshold
/// is compared against at the initial parameters.
pub(crate) fn full_train_gradient_norm(
    params: &ModelParams,
    g: &AttributedGraph,
) -> Result<f64, TrainError> {
    let train = g.split_nodes(Split::Train);
    if train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    full_gradient_norm_over(params, g, &train)
}

pub(crate) fn full_gradient_norm_over(
    params: &ModelParams,
    g: &AttributedGraph,
    nodes: &[usize],
) -> Result<f64, TrainError> {
    let labels: Vec<i64> = nodes.iter().map(|&v| g.label(v)).collect();
    let cg = full_computational_graph_batch(g, nodes, params.depth())?;
    let rec = backward(params, &cg, g.features(), &LossTarget::Nll { labels: &labels })?;
    Ok(rec.norm())
}

/// The graph an epoch trains on: either the source graph borrowed as-is or
/// an owned subgraph draw.
enum Phase<'a> {
    Whole(&'a AttributedGraph),
    Sub(Subgraph),
}

impl Phase<'_> {
    fn graph(&self) -> &AttributedGraph {
        match self {
            Phase::Whole(g) => g,
            Phase::Sub(s) => &s.graph,
        }
    }
}

fn draw_phase<'a>(
    g: &'a AttributedGraph,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Phase<'a>, TrainError> {
    match cfg.sampler.subgraph_sampler {
        SubgraphSampler::WholeGraph => {
            if g.split_nodes(Split::Train).is_empty() {
                return Err(TrainError::EmptySplit("train"));
            }
            Ok(Phase::Whole(g))
        }
        SubgraphSampler::Bfs { max_nodes } => {
            for _ in 0..cfg.max_redraws {
                let sub = bfs_subgraph(g, max_nodes, rng)?;
                if !sub.graph.split_nodes(Split::Train).is_empty() {
                    return Ok(Phase::Sub(sub));
                }
            }
            Err(TrainError::TrainlessSubgraph { attempts: cfg.max_redraws })
        }
    }
}

enum OptState {
    Sgd,
    Adam(AdamState),
}

impl OptState {
    fn apply(&mut self, params: &mut ModelParams, grad: &GradientRecord, lr: f64) {
        match self {
            OptState::Sgd => sgd_step(params, grad, lr),
            OptState::Adam(state) => state.step(params, grad, lr),
        }
    }
}

/// Computational graphs backing one batch: a single shared graph whose seed
/// rows line up with the seed list, or one graph per seed for samplers that
/// only extract per-seed neighborhoods.
enum BatchGraphs {
    Shared(ComputationalGraph),
    PerSeed(Vec<ComputationalGraph>),
}

fn build_batch_graphs(
    g: &AttributedGraph,
    comp: &CompSampler,
    depth: usize,
    seeds: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<BatchGraphs, TrainError> {
    match comp {
        CompSampler::Full => {
            Ok(BatchGraphs::Shared(full_computational_graph_batch(g, seeds, depth)?))
        }
        CompSampler::Sage { fanouts } => {
            let mut cgs = Vec::with_capacity(seeds.len());
            for &v in seeds {
                cgs.push(sage_computational_graph(g, v, fanouts, rng)?);
            }
            Ok(BatchGraphs::PerSeed(cgs))
        }
        CompSampler::Fastgcn { layer_sizes } => Ok(BatchGraphs::Shared(
            fastgcn_computational_graph(g, seeds, layer_sizes, rng)?,
        )),
        CompSampler::Shadow { depth, inner } => {
            Ok(BatchGraphs::Shared(shadow_extract(g, seeds, *depth, inner, rng)?))
        }
    }
}

fn comp_depth(comp: &CompSampler) -> Option<usize> {
    match comp {
        CompSampler::Full => None,
        CompSampler::Sage { fanouts } => Some(fanouts.len()),
        CompSampler::Fastgcn { layer_sizes } => Some(layer_sizes.len()),
        CompSampler::Shadow { depth, .. } => Some(*depth),
    }
}

/// Importance-weighted classification step: every estimator path reduces to
/// `(1/B) * sum_i (1/w_i) * grad_i`.
fn nll_step(
    params: &ModelParams,
    g: &AttributedGraph,
    comp: &CompSampler,
    batch: &Minibatch,
    rng: &mut ChaCha8Rng,
) -> Result<GradientRecord, TrainError> {
    let labels: Vec<i64> = batch.nodes.iter().map(|&v| g.label(v)).collect();
    let b = batch.nodes.len() as f64;
    match build_batch_graphs(g, comp, params.depth(), &batch.nodes, rng)? {
        BatchGraphs::Shared(cg) => {
            let run = forward(params, &cg, g.features())?;
            let classes = run.seed_outputs.ncols();
            let mut dz = Array2::zeros((labels.len(), classes));
            let mut loss = 0.0;
            for (i, &y) in labels.iter().enumerate() {
                let inv_w = 1.0 / (b * batch.weights[i]);
                let (l, d) = nll_loss(run.seed_outputs.slice(s![i..i + 1, ..]), &[y])?;
                loss += l * inv_w;
                dz.row_mut(i).scaled_add(inv_w, &d.row(0));
            }
            let mut rec = backward_from_outputs(params, &cg, g.features(), &run, &dz)?;
            rec.loss = loss;
            Ok(rec)
        }
        BatchGraphs::PerSeed(cgs) => {
            let mut records = Vec::with_capacity(cgs.len());
            for (cg, &y) in cgs.iter().zip(&labels) {
                records.push(backward(
                    params,
                    cg,
                    g.features(),
                    &LossTarget::Nll { labels: &[y] },
                )?);
            }
            Ok(estimate_gradient(&records, &batch.weights)?)
        }
    }
}

struct PairSpec {
    anchor: usize,
    partner: usize,
    negs: Vec<usize>,
    inv_w: f64,
}

/// Link-prediction step: each batch node with neighbors anchors one positive
/// pair (a uniform neighbor) plus `negatives` uniform corruption nodes, and
/// contributes with its importance weight. Batch nodes of degree zero are
/// skipped; a batch with no usable pair contributes a zero step.
fn negsample_step(
    params: &ModelParams,
    g: &AttributedGraph,
    comp: &CompSampler,
    batch: &Minibatch,
    negatives: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GradientRecord, TrainError> {
    let n = g.node_count();
    let b = batch.nodes.len() as f64;
    let mut seed_nodes: Vec<usize> = Vec::new();
    let mut slot_of: HashMap<usize, usize> = HashMap::new();
    let mut intern = |node: usize, seed_nodes: &mut Vec<usize>| -> usize {
        *slot_of.entry(node).or_insert_with(|| {
            seed_nodes.push(node);
            seed_nodes.len() - 1
        })
    };
    let mut pairs: Vec<PairSpec> = Vec::new();
    for (i, &v) in batch.nodes.iter().enumerate() {
        let nbrs = g.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let partner = nbrs[rng.random_range(0..nbrs.len())] as usize;
        let anchor = intern(v, &mut seed_nodes);
        let partner = intern(partner, &mut seed_nodes);
        let negs: Vec<usize> = (0..negatives)
            .map(|_| intern(rng.random_range(0..n), &mut seed_nodes))
            .collect();
        pairs.push(PairSpec { anchor, partner, negs, inv_w: 1.0 / (b * batch.weights[i]) });
    }
    if pairs.is_empty() {
        return Ok(GradientRecord::zeros_like(params));
    }

    let accumulate = |emb: &Array2<f64>| -> Result<(f64, Array2<f64>), TrainError> {
        let mut loss = 0.0;
        let mut dz = Array2::zeros(emb.dim());
        for p in &pairs {
            let (l, d) =
                negsample_loss(emb.view(), &[(p.anchor, p.partner)], &[p.negs.clone()])?;
            loss += l * p.inv_w;
            dz.scaled_add(p.inv_w, &d);
        }
        Ok((loss, dz))
    };

    match build_batch_graphs(g, comp, params.depth(), &seed_nodes, rng)? {
        BatchGraphs::Shared(cg) => {
            let run = forward(params, &cg, g.features())?;
            let (loss, dz) = accumulate(&run.seed_outputs)?;
            let mut rec = backward_from_outputs(params, &cg, g.features(), &run, &dz)?;
            rec.loss = loss;
            Ok(rec)
        }
        BatchGraphs::PerSeed(cgs) => {
            let mut runs = Vec::with_capacity(cgs.len());
            let dim = params.output_dim();
            let mut emb = Array2::zeros((cgs.len(), dim));
            for (j, cg) in cgs.iter().enumerate() {
                let run = forward(params, cg, g.features())?;
                emb.row_mut(j).assign(&run.seed_outputs.row(0));
                runs.push(run);
            }
            let (loss, dz) = accumulate(&emb)?;
            let mut total = GradientRecord::zeros_like(params);
            for (j, (cg, run)) in cgs.iter().zip(&runs).enumerate() {
                let dj = dz.slice(s![j..j + 1, ..]).to_owned();
                let rec = backward_from_outputs(params, cg, g.features(), run, &dj)?;
                total.add_scaled(&rec, 1.0);
            }
            total.loss = loss;
            Ok(total)
        }
    }
}

fn split_accuracies(
    outputs: &Array2<f64>,
    g: &AttributedGraph,
    output: OutputMap,
) -> (f64, f64, f64) {
    let acc = |split: Split| -> f64 {
        let nodes = g.split_nodes(split);
        if nodes.is_empty() {
            return f64::NAN;
        }
        eval_on(outputs, g, &nodes, output).accuracy
    };
    (acc(Split::Train), acc(Split::Val), acc(Split::Test))
}

fn run_loop(
    g: &AttributedGraph,
    mut params: ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if let Some(d) = comp_depth(&cfg.sampler.comp_sampler) {
        if d != params.depth() {
            return Err(TrainError::BadConfig(format!(
                "computational-graph sampler covers {d} layers but the model has {}",
                params.depth()
            )));
        }
    }
    if cfg.loss == LossKind::Nll && params.output != OutputMap::LogSoftmax {
        return Err(TrainError::BadConfig(
            "classification loss needs a log_softmax output map".into(),
        ));
    }
    if g.node_count() == 0 {
        return Err(TrainError::EmptySplit("train"));
    }

    let mut rng_draw = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng_draw.set_stream(DRAW_STREAM);
    let mut rng_train = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng_train.set_stream(TRAIN_STREAM);

    let mut draws = 0usize;
    let mut phase = draw_phase(g, cfg, &mut rng_draw)?;
    draws += 1;

    let initial_grad_norm = match cfg.loss {
        LossKind::Nll => Some(full_train_gradient_norm(&params, phase.graph())?),
        LossKind::NegSample { .. } => None,
    };
    let stop_at_init = match initial_grad_norm {
        Some(n0) => n0 <= cfg.epsilon,
        None => cfg.epsilon.is_infinite(),
    };
    if stop_at_init {
        return Ok(TrainOutcome {
            params,
            metrics: RunMetrics {
                rows: Vec::new(),
                stop_epoch: 0,
                stop_reason: StopReason::ThresholdAtInit,
                initial_grad_norm,
            },
        });
    }

    let mut opt = match cfg.optimizer {
        Optimizer::Sgd => OptState::Sgd,
        Optimizer::Adam => OptState::Adam(AdamState::new(&params)),
    };
    let mut ema: Option<f64> = None;
    let mut rows: Vec<EpochRow> = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 0..cfg.max_epochs {
        if epoch > 0 && epoch % cfg.sampler.resample_interval == 0 {
            phase = draw_phase(g, cfg, &mut rng_draw)?;
            draws += 1;
        }
        let started = Instant::now();
        let g_t = phase.graph();
        let train_count = g_t.split_nodes(Split::Train).len();
        let steps = train_count.div_ceil(cfg.sampler.batch_size);
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        for _ in 0..steps {
            let batch = sample_minibatch(
                g_t,
                cfg.sampler.node_sampler,
                cfg.sampler.batch_size,
                &mut rng_train,
            )?;
            let grad = match cfg.loss {
                LossKind::Nll => {
                    nll_step(&params, g_t, &cfg.sampler.comp_sampler, &batch, &mut rng_train)?
                }
                LossKind::NegSample { negatives } => negsample_step(
                    &params,
                    g_t,
                    &cfg.sampler.comp_sampler,
                    &batch,
                    negatives,
                    &mut rng_train,
                )?,
            };
            let norm = grad.norm();
            opt.apply(&mut params, &grad, cfg.lr);
            loss_sum += grad.loss;
            norm_sum += norm;
            ema = Some(match ema {
                None => norm,
                Some(e) => 0.9 * e + 0.1 * norm,
            });
        }
        let outputs = full_graph_forward(&params, g)?;
        let (train_acc, val_acc, test_acc) = split_accuracies(&outputs, g, params.output);
        let wall_ms = if cfg.deterministic {
            0
        } else {
            started.elapsed().as_millis() as u64
        };
        let grad_norm_ema = ema.expect("at least one step per epoch");
        rows.push(EpochRow {
            epoch,
            subgraph_id: draws - 1,
            train_loss: loss_sum / steps as f64,
            train_acc,
            val_acc,
            test_acc,
            grad_norm: norm_sum / steps as f64,
            grad_norm_ema,
            wall_ms,
        });
        if cfg.epsilon > 0.0 && grad_norm_ema <= cfg.epsilon {
            stop_reason = StopReason::EmaBelowThreshold;
            break;
        }
    }

    let stop_epoch = rows.len();
    Ok(TrainOutcome {
        params,
        metrics: RunMetrics { rows, stop_epoch, stop_reason, initial_grad_norm },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gnnlab_engine::Architecture;
    use gnnlab_samplers::{NodeSampler, SamplerSpec};

    use crate::datasets::toy_two_class_graph;

    fn toy_params(seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams::new(
            Architecture::Gcn,
            2,
            &[8, 8],
            Some(2),
            OutputMap::LogSoftmax,
            &mut rng,
        )
    }

    fn toy_cfg() -> TrainConfig {
        TrainConfig {
            lr: 0.05,
            optimizer: Optimizer::Adam,
            epsilon: 0.0,
            max_epochs: 5,
            sampler: SamplerSpec::whole_graph(8),
            loss: LossKind::Nll,
            seed: 7,
            deterministic: true,
            max_redraws: 16,
        }
    }

    #[test]
    fn nll_loss_on_identity_output_is_rejected_early() {
        let g = toy_two_class_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ModelParams::new(
            Architecture::Gcn,
            2,
            &[4],
            Some(2),
            OutputMap::Identity,
            &mut rng,
        );
        let err = train_full(&g, &p, &toy_cfg()).unwrap_err();
        assert!(matches!(err, TrainError::BadConfig(_)));
    }

    #[test]
    fn sampler_depth_must_match_model_depth() {
        let g = toy_two_class_graph();
        let mut cfg = toy_cfg();
        cfg.sampler.comp_sampler = CompSampler::Sage { fanouts: vec![4] };
        let err = train_full(&g, &toy_params(0), &cfg).unwrap_err();
        assert!(matches!(err, TrainError::BadConfig(_)));
    }

    #[test]
    fn mode_entry_points_reject_mismatched_subgraph_samplers() {
        let g = toy_two_class_graph();
        let cfg = toy_cfg();
        assert!(train_on_subgraphs(&g, &toy_params(0), &cfg).is_err());
        let mut cfg_sub = toy_cfg();
        cfg_sub.sampler.subgraph_sampler = SubgraphSampler::Bfs { max_nodes: 10 };
        assert!(train_full(&g, &toy_params(0), &cfg_sub).is_err());
    }

    #[test]
    fn tied_outputs_predict_the_lowest_class() {
        let g = toy_two_class_graph();
        let mut p = toy_params(3);
        for layer in &mut p.layers {
            for m in &mut layer.mats {
                m.fill(0.0);
            }
        }
        p.head.as_mut().unwrap().fill(0.0);
        let report = evaluate(&p, &g, Split::Train).unwrap();
        assert_eq!(report.accuracy, 0.5);
        let expected = (2.0f64).ln();
        assert!((report.mean_loss.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn degree_weighted_batches_train_without_error() {
        let g = toy_two_class_graph();
        let mut cfg = toy_cfg();
        cfg.sampler.node_sampler = NodeSampler::DegreeWeighted;
        cfg.max_epochs = 3;
        let out = train_full(&g, &toy_params(1), &cfg).unwrap();
        assert_eq!(out.metrics.rows.len(), 3);
        assert!(out.metrics.rows.iter().all(|r| r.train_loss.is_finite()));
    }
}
