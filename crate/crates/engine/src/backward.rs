//! Hand-written reverse-mode differentiation through the layered forward
//! pass. Mirrors `forward` step by step: output map, optional head, then the
//! message-passing layers from top to bottom, scattering parent gradients
//! back onto child slots with the same coefficients the forward pass used.

use ndarray::{s, Array2};

use gnnlab_graph::FeatureMatrix;
use gnnlab_samplers::ComputationalGraph;

use crate::error::EngineError;
use crate::forward::{forward, ForwardResult};
use crate::loss::{negsample_loss, nll_loss, LossTarget};
use crate::params::{Architecture, GradientRecord, ModelParams, OutputMap};

fn sage_edge_weights(agg: &gnnlab_samplers::Aggregation, n_parents: usize) -> Vec<f64> {
    if agg.weighted {
        agg.edges.iter().map(|e| e.weight).collect()
    } else {
        let mut fan_in = vec![0usize; n_parents];
        for e in &agg.edges {
            fan_in[e.parent as usize] += 1;
        }
        agg.edges
            .iter()
            .map(|e| 1.0 / fan_in[e.parent as usize] as f64)
            .collect()
    }
}

/// `dW` for a layer-0 transform: accumulates `x_row^T . dT` over the sparse
/// feature rows of the child slots.
fn sparse_grad_w(
    features: &FeatureMatrix,
    nodes: &[usize],
    d_t: &Array2<f64>,
) -> Array2<f64> {
    let mut dw = Array2::zeros((features.dim(), d_t.ncols()));
    for (slot, &v) in nodes.iter().enumerate() {
        let dts = d_t.row(slot);
        for &(j, x) in features.row(v) {
            dw.row_mut(j as usize).scaled_add(x, &dts);
        }
    }
    dw
}

/// Gradient of the output map given the mapped values and the upstream
/// gradient, returning the gradient at the pre-map values.
fn output_map_backward(map: OutputMap, mapped: &Array2<f64>, d_out: Array2<f64>) -> Array2<f64> {
    match map {
        OutputMap::Identity => d_out,
        OutputMap::Relu => {
            let mut d = d_out;
            for (g, &y) in d.iter_mut().zip(mapped.iter()) {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }
            d
        }
        OutputMap::LogSoftmax => {
            let mut d = d_out;
            for (mut drow, lrow) in d.rows_mut().into_iter().zip(mapped.rows()) {
                let total: f64 = drow.sum();
                for (g, &lp) in drow.iter_mut().zip(lrow.iter()) {
                    *g -= lp.exp() * total;
                }
            }
            d
        }
    }
}

fn relu_backward_in_place(d: &mut Array2<f64>, activated: &Array2<f64>) {
    for (g, &y) in d.iter_mut().zip(activated.iter()) {
        if y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Backpropagates `d_seed_outputs` (one row per seed, in batch order)
/// through a completed forward pass. The returned record's `loss` field is
/// zero; callers fill it in.
pub fn backward_from_outputs(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
    run: &ForwardResult,
    d_seed_outputs: &Array2<f64>,
) -> Result<GradientRecord, EngineError> {
    let trace = &run.trace;
    if d_seed_outputs.dim() != run.seed_outputs.dim() {
        return Err(EngineError::DimMismatch(format!(
            "output gradient is {:?} but outputs are {:?}",
            d_seed_outputs.dim(),
            run.seed_outputs.dim()
        )));
    }
    let l_count = params.depth();
    let mut grads = GradientRecord::zeros_like(params);

    let mut d_top = Array2::zeros(trace.top.dim());
    for (i, &slot) in cg.seed_slots.iter().enumerate() {
        d_top
            .row_mut(slot as usize)
            .scaled_add(1.0, &d_seed_outputs.row(i));
    }
    let d_top = output_map_backward(params.output, &trace.top, d_top);

    // Gradient flowing into the pre-activations of the topmost
    // message-passing layer.
    let mut d_pre = match &params.head {
        Some(head) => {
            let emb = &trace.acts[l_count];
            *grads.head.as_mut().unwrap() = emb.t().dot(&d_top);
            let mut d_emb = d_top.dot(&head.t());
            relu_backward_in_place(&mut d_emb, emb);
            d_emb
        }
        None => d_top,
    };

    for l in (0..l_count).rev() {
        let agg = &cg.aggs[l];
        let children = &cg.layers[l];
        let n_in = children.len();
        let (d_w_list, d_h) = match params.arch {
            Architecture::Gcn => {
                let w = &params.layers[l].mats[0];
                let mut d_t = Array2::zeros((n_in, w.ncols()));
                for (p, &sc) in agg.self_child.iter().enumerate() {
                    let dp = cg.degrees[l + 1][p] as f64 + 1.0;
                    d_t.row_mut(sc as usize).scaled_add(1.0 / dp, &d_pre.row(p));
                }
                for e in &agg.edges {
                    let dp = cg.degrees[l + 1][e.parent as usize] as f64 + 1.0;
                    let dc = cg.degrees[l][e.child as usize] as f64 + 1.0;
                    d_t.row_mut(e.child as usize)
                        .scaled_add(1.0 / (dp * dc).sqrt(), &d_pre.row(e.parent as usize));
                }
                let d_w = if l == 0 {
                    sparse_grad_w(features, children, &d_t)
                } else {
                    trace.acts[l].t().dot(&d_t)
                };
                let d_h = (l > 0).then(|| d_t.dot(&w.t()));
                (vec![d_w], d_h)
            }
            Architecture::Sage => {
                let w = &params.layers[l].mats[0];
                let f_in = w.nrows() / 2;
                let f_out = w.ncols();
                let weights = sage_edge_weights(agg, cg.layers[l + 1].len());
                let mut d_s = Array2::zeros((n_in, f_out));
                let mut d_t = Array2::zeros((n_in, f_out));
                for (p, &sc) in agg.self_child.iter().enumerate() {
                    d_s.row_mut(sc as usize).scaled_add(1.0, &d_pre.row(p));
                }
                for (e, &wt) in agg.edges.iter().zip(&weights) {
                    d_t.row_mut(e.child as usize)
                        .scaled_add(wt, &d_pre.row(e.parent as usize));
                }
                let mut d_w = Array2::zeros((2 * f_in, f_out));
                if l == 0 {
                    d_w.slice_mut(s![..f_in, ..])
                        .assign(&sparse_grad_w(features, children, &d_s));
                    d_w.slice_mut(s![f_in.., ..])
                        .assign(&sparse_grad_w(features, children, &d_t));
                } else {
                    let h = &trace.acts[l];
                    d_w.slice_mut(s![..f_in, ..]).assign(&h.t().dot(&d_s));
                    d_w.slice_mut(s![f_in.., ..]).assign(&h.t().dot(&d_t));
                }
                let d_h = (l > 0).then(|| {
                    let mut d = d_s.dot(&w.slice(s![..f_in, ..]).t());
                    d += &d_t.dot(&w.slice(s![f_in.., ..]).t());
                    d
                });
                (vec![d_w], d_h)
            }
            Architecture::Gin => {
                let w1 = &params.layers[l].mats[0];
                let w2 = &params.layers[l].mats[1];
                let u = trace.gin_hidden[l].as_ref().unwrap();
                let d_w2 = u.t().dot(&d_pre);
                let mut d_z1 = d_pre.dot(&w2.t());
                relu_backward_in_place(&mut d_z1, u);
                let mut d_t = Array2::zeros((n_in, w1.ncols()));
                for (p, &sc) in agg.self_child.iter().enumerate() {
                    d_t.row_mut(sc as usize).scaled_add(1.0, &d_z1.row(p));
                }
                for e in &agg.edges {
                    d_t.row_mut(e.child as usize)
                        .scaled_add(1.0, &d_z1.row(e.parent as usize));
                }
                let d_w1 = if l == 0 {
                    sparse_grad_w(features, children, &d_t)
                } else {
                    trace.acts[l].t().dot(&d_t)
                };
                let d_h = (l > 0).then(|| d_t.dot(&w1.t()));
                (vec![d_w1, d_w2], d_h)
            }
        };
        grads.layers[l] = d_w_list;
        if let Some(mut d) = d_h {
            relu_backward_in_place(&mut d, &trace.acts[l]);
            d_pre = d;
        }
    }
    Ok(grads)
}

fn loss_and_output_grad(
    params: &ModelParams,
    run: &ForwardResult,
    target: &LossTarget,
) -> Result<(f64, Array2<f64>), EngineError> {
    match target {
        LossTarget::Nll { labels } => {
            if params.output != OutputMap::LogSoftmax {
                return Err(EngineError::LossMismatch(
                    "negative log-likelihood needs log_softmax outputs".into(),
                ));
            }
            nll_loss(run.seed_outputs.view(), labels)
        }
        LossTarget::NegSample { pairs, negatives } => {
            negsample_loss(run.seed_outputs.view(), pairs, negatives)
        }
    }
}

/// Forward plus reverse pass: the gradient of the batch loss with respect to
/// every parameter, with the loss value in the record.
pub fn backward(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
    target: &LossTarget,
) -> Result<GradientRecord, EngineError> {
    let run = forward(params, cg, features)?;
    let (loss, d_out) = loss_and_output_grad(params, &run, target)?;
    let mut grads = backward_from_outputs(params, cg, features, &run, &d_out)?;
    grads.loss = loss;
    Ok(grads)
}

/// Loss value and relu pattern only, for finite differencing.
pub(crate) fn loss_and_pattern(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
    target: &LossTarget,
) -> Result<(f64, u64), EngineError> {
    let run = forward(params, cg, features)?;
    let (loss, _) = loss_and_output_grad(params, &run, target)?;
    Ok((loss, run.pattern_hash))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use gnnlab_graph::AttributedGraph;
    use gnnlab_samplers::full_computational_graph_batch;
    use ndarray::array;

    use crate::params::LayerParams;

    #[test]
    fn single_node_softmax_classifier_gradient() {
        let g = AttributedGraph::from_edges(
            1,
            &[],
            FeatureMatrix::from_dense(&array![[1.0]]),
            vec![0],
            vec![true],
            vec![false],
            vec![false],
        )
        .unwrap();
        let cg = full_computational_graph_batch(&g, &[0], 1).unwrap();
        let (a, b) = (0.3, -0.2);
        let params = ModelParams {
            arch: Architecture::Gcn,
            layers: vec![LayerParams { mats: vec![array![[a, b]]] }],
            head: None,
            output: OutputMap::LogSoftmax,
        };
        let rec = backward(&params, &cg, g.features(), &LossTarget::Nll { labels: &[0] })
            .unwrap();
        let z = (f64::exp(a), f64::exp(b));
        let p0 = z.0 / (z.0 + z.1);
        let p1 = z.1 / (z.0 + z.1);
        let lse = (z.0 + z.1).ln();
        assert_relative_eq!(rec.loss, lse - a, epsilon = 1e-12);
        assert_relative_eq!(rec.layers[0][0][[0, 0]], p0 - 1.0, epsilon = 1e-12);
        assert_relative_eq!(rec.layers[0][0][[0, 1]], p1, epsilon = 1e-12);
    }

    #[test]
    fn single_node_negsample_gradient_matches_closed_form() {
        let g = AttributedGraph::from_edges(
            1,
            &[],
            FeatureMatrix::from_dense(&array![[1.5]]),
            vec![0],
            vec![true],
            vec![false],
            vec![false],
        )
        .unwrap();
        let cg = full_computational_graph_batch(&g, &[0], 1).unwrap();
        let w = 0.8;
        let params = ModelParams {
            arch: Architecture::Gcn,
            layers: vec![LayerParams { mats: vec![array![[w]]] }],
            head: None,
            output: OutputMap::Identity,
        };
        let target = LossTarget::NegSample { pairs: &[(0, 0)], negatives: &[vec![]] };
        let rec = backward(&params, &cg, g.features(), &target).unwrap();
        let x = 1.5;
        let z = x * w;
        let s = z * z;
        assert_relative_eq!(rec.loss, crate::loss::softplus(-s), epsilon = 1e-12);
        let expected = (crate::loss::sigmoid(s) - 1.0) * 2.0 * z * x;
        assert_relative_eq!(rec.layers[0][0][[0, 0]], expected, epsilon = 1e-12);
    }

    #[test]
    fn gradients_are_bitwise_reproducible() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = AttributedGraph::from_edges(
            5,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)],
            FeatureMatrix::from_dense(&array![
                [1.0, 0.0],
                [0.0, 2.0],
                [1.0, 1.0],
                [0.5, 0.0],
                [0.0, 0.25],
            ]),
            vec![0, 1, 0, 1, 0],
            vec![false; 5],
            vec![false; 5],
            vec![false; 5],
        )
        .unwrap();
        let cg = full_computational_graph_batch(&g, &[0, 2, 4], 2).unwrap();
        let params = ModelParams::new(
            Architecture::Sage,
            2,
            &[3, 2],
            Some(2),
            OutputMap::LogSoftmax,
            &mut rng,
        );
        let target = LossTarget::Nll { labels: &[0, 0, 0] };
        let a = backward(&params, &cg, g.features(), &target).unwrap();
        let b = backward(&params, &cg, g.features(), &target).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nll_on_identity_output_is_rejected() {
        let g = AttributedGraph::from_edges(
            1,
            &[],
            FeatureMatrix::from_dense(&array![[1.0]]),
            vec![0],
            vec![false],
            vec![false],
            vec![false],
        )
        .unwrap();
        let cg = full_computational_graph_batch(&g, &[0], 1).unwrap();
        let params = ModelParams {
            arch: Architecture::Gcn,
            layers: vec![LayerParams { mats: vec![array![[1.0, 1.0]]] }],
            head: None,
            output: OutputMap::Identity,
        };
        assert!(matches!(
            backward(&params, &cg, g.features(), &LossTarget::Nll { labels: &[0] }),
            Err(EngineError::LossMismatch(_))
        ));
    }
}
