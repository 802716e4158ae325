//! Forward evaluation, over a sampled computational graph or the full graph.
//!
//! Layer 0 multiplies sparse feature rows into the weight matrix before
//! aggregating, which by linearity matches aggregate-then-transform while
//! touching only nonzero entries. All reductions run in a fixed order, so
//! repeated evaluation is bitwise reproducible.

use ndarray::{s, Array2, ArrayView2};

use gnnlab_graph::{AttributedGraph, FeatureMatrix};
use gnnlab_samplers::ComputationalGraph;

use crate::error::EngineError;
use crate::params::{Architecture, ModelParams, OutputMap};

/// Running hash of every relu decision taken during a forward pass. Two
/// evaluations with the same hash used the same linear region, which is what
/// the finite-difference checker needs to rule out kink crossings.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PatternAcc {
    acc: u64,
    buf: u64,
    nbits: u32,
}

impl PatternAcc {
    pub(crate) fn new() -> Self {
        PatternAcc { acc: 0x9e37_79b9_7f4a_7c15, buf: 0, nbits: 0 }
    }

    fn mix(&mut self) {
        let mut z = self.acc ^ self.buf;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        self.acc = z ^ (z >> 31);
        self.buf = 0;
        self.nbits = 0;
    }

    fn push(&mut self, bit: bool) {
        self.buf = (self.buf << 1) | bit as u64;
        self.nbits += 1;
        if self.nbits == 64 {
            self.mix();
        }
    }

    fn finish(mut self) -> u64 {
        if self.nbits > 0 {
            self.buf ^= (self.nbits as u64) << 56;
            self.mix();
        }
        self.acc
    }
}

fn relu_in_place(m: &mut Array2<f64>, pat: &mut PatternAcc) {
    for x in m.iter_mut() {
        let active = *x > 0.0;
        pat.push(active);
        if !active {
            *x = 0.0;
        }
    }
}

fn apply_output(mut m: Array2<f64>, map: OutputMap, pat: &mut PatternAcc) -> Array2<f64> {
    match map {
        OutputMap::Identity => m,
        OutputMap::Relu => {
            relu_in_place(&mut m, pat);
            m
        }
        OutputMap::LogSoftmax => {
            for mut row in m.rows_mut() {
                let mx = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let lse = mx + row.iter().map(|&x| (x - mx).exp()).sum::<f64>().ln();
                row.mapv_inplace(|x| x - lse);
            }
            m
        }
    }
}

/// Multiplies sparse feature rows for `nodes` into `w`, row by row.
fn sparse_transform(
    features: &FeatureMatrix,
    nodes: &[usize],
    w: ArrayView2<f64>,
) -> Array2<f64> {
    let mut out = Array2::zeros((nodes.len(), w.ncols()));
    for (s, &v) in nodes.iter().enumerate() {
        for &(j, x) in features.row(v) {
            out.row_mut(s).scaled_add(x, &w.row(j as usize));
        }
    }
    out
}

/// Child-side transform for one layer: dense matmul above layer 0, sparse
/// feature multiply at layer 0.
fn child_transform(
    features: &FeatureMatrix,
    nodes: &[usize],
    h: Option<&Array2<f64>>,
    w: ArrayView2<f64>,
) -> Array2<f64> {
    match h {
        Some(h) => h.dot(&w),
        None => sparse_transform(features, nodes, w),
    }
}

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

/// Pre-activation output of message-passing layer `l`. Returns the GIN MLP
/// hidden activation alongside when the architecture has one.
fn layer_pre(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
    h: Option<&Array2<f64>>,
    l: usize,
    pat: &mut PatternAcc,
) -> (Array2<f64>, Option<Array2<f64>>) {
    let agg = &cg.aggs[l];
    let children = &cg.layers[l];
    let n_out = cg.layers[l + 1].len();
    match params.arch {
        Architecture::Gcn => {
            let w = &params.layers[l].mats[0];
            let t = child_transform(features, children, h, w.view());
            let mut pre = Array2::zeros((n_out, w.ncols()));
            for (p, &sc) in agg.self_child.iter().enumerate() {
                let dp = cg.degrees[l + 1][p] as f64 + 1.0;
                pre.row_mut(p).scaled_add(1.0 / dp, &t.row(sc as usize));
            }
            for e in &agg.edges {
                let dp = cg.degrees[l + 1][e.parent as usize] as f64 + 1.0;
                let dc = cg.degrees[l][e.child as usize] as f64 + 1.0;
                pre.row_mut(e.parent as usize)
                    .scaled_add(1.0 / (dp * dc).sqrt(), &t.row(e.child as usize));
            }
            (pre, None)
        }
        Architecture::Sage => {
            let w = &params.layers[l].mats[0];
            let f_in = w.nrows() / 2;
            let w_self = w.slice(s![..f_in, ..]);
            let w_agg = w.slice(s![f_in.., ..]);
            let t_self = child_transform(features, children, h, w_self);
            let t_agg = child_transform(features, children, h, w_agg);
            let weights = sage_edge_weights(agg, n_out);
            let mut pre = Array2::zeros((n_out, w.ncols()));
            for (p, &sc) in agg.self_child.iter().enumerate() {
                pre.row_mut(p).scaled_add(1.0, &t_self.row(sc as usize));
            }
            for (e, &wt) in agg.edges.iter().zip(&weights) {
                pre.row_mut(e.parent as usize)
                    .scaled_add(wt, &t_agg.row(e.child as usize));
            }
            (pre, None)
        }
        Architecture::Gin => {
            let w1 = &params.layers[l].mats[0];
            let w2 = &params.layers[l].mats[1];
            let t = child_transform(features, children, h, w1.view());
            let mut z1 = Array2::zeros((n_out, w1.ncols()));
            for (p, &sc) in agg.self_child.iter().enumerate() {
                z1.row_mut(p).scaled_add(1.0, &t.row(sc as usize));
            }
            for e in &agg.edges {
                z1.row_mut(e.parent as usize)
                    .scaled_add(1.0, &t.row(e.child as usize));
            }
            relu_in_place(&mut z1, pat);
            let pre = z1.dot(w2);
            (pre, Some(z1))
        }
    }
}

/// Everything backward needs from a forward pass.
#[derive(Debug, Clone)]
pub(crate) struct ForwardTrace {
    /// `acts[l]` for `l >= 1`: post-relu embeddings of the layer-`l` slots.
    /// `acts[0]` is an empty placeholder (layer 0 reads sparse features).
    /// The top entry exists only when the model has a head.
    pub(crate) acts: Vec<Array2<f64>>,
    /// GIN MLP hidden activations per layer, `None` for other architectures.
    pub(crate) gin_hidden: Vec<Option<Array2<f64>>>,
    /// Output-mapped values for every top-layer slot.
    pub(crate) top: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardResult {
    /// One row per seed, in batch order: the output-mapped model values.
    pub seed_outputs: Array2<f64>,
    /// Hash of all relu activation decisions taken during this pass.
    pub pattern_hash: u64,
    pub(crate) trace: ForwardTrace,
}

fn check_inputs(
    params: &ModelParams,
    depth: usize,
    features: &FeatureMatrix,
    input_nodes: &[usize],
) -> Result<(), EngineError> {
    if depth != params.depth() {
        return Err(EngineError::DepthMismatch { graph: depth, model: params.depth() });
    }
    if features.dim() != params.input_dim() {
        return Err(EngineError::DimMismatch(format!(
            "features have dimension {} but the model expects {}",
            features.dim(),
            params.input_dim()
        )));
    }
    if let Some(&v) = input_nodes.iter().find(|&&v| v >= features.n_rows()) {
        return Err(EngineError::DimMismatch(format!(
            "node {v} has no feature row (only {} rows)",
            features.n_rows()
        )));
    }
    Ok(())
}

/// Runs the model over a sampled computational graph.
pub fn forward(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
) -> Result<ForwardResult, EngineError> {
    check_inputs(params, cg.depth(), features, &cg.layers[0])?;
    let l_count = params.depth();
    let has_head = params.head.is_some();
    let mut pat = PatternAcc::new();
    let mut acts: Vec<Array2<f64>> = vec![Array2::zeros((0, 0))];
    let mut gin_hidden = Vec::with_capacity(l_count);
    let mut top: Option<Array2<f64>> = None;
    for l in 0..l_count {
        let h = if l == 0 { None } else { Some(&acts[l]) };
        let (mut pre, hidden) = layer_pre(params, cg, features, h, l, &mut pat);
        gin_hidden.push(hidden);
        if !has_head && l == l_count - 1 {
            top = Some(apply_output(pre, params.output, &mut pat));
        } else {
            relu_in_place(&mut pre, &mut pat);
            acts.push(pre);
        }
    }
    let top = match &params.head {
        Some(head) => {
            let emb = &acts[l_count];
            apply_output(emb.dot(head), params.output, &mut pat)
        }
        None => top.unwrap(),
    };
    let mut seed_outputs = Array2::zeros((cg.seed_slots.len(), top.ncols()));
    for (i, &slot) in cg.seed_slots.iter().enumerate() {
        seed_outputs.row_mut(i).assign(&top.row(slot as usize));
    }
    Ok(ForwardResult {
        seed_outputs,
        pattern_hash: pat.finish(),
        trace: ForwardTrace { acts, gin_hidden, top },
    })
}

/// Runs the model over the whole graph with untruncated neighborhoods,
/// returning one output row per node. This is the evaluation path; it never
/// allocates per-node computational graphs.
pub fn full_graph_forward(
    params: &ModelParams,
    g: &AttributedGraph,
) -> Result<Array2<f64>, EngineError> {
    let n = g.node_count();
    let all: Vec<usize> = (0..n).collect();
    check_inputs(params, params.depth(), g.features(), &all)?;
    let l_count = params.depth();
    let has_head = params.head.is_some();
    let mut pat = PatternAcc::new();
    let mut h: Option<Array2<f64>> = None;
    let mut top: Option<Array2<f64>> = None;
    for l in 0..l_count {
        let mut pre = full_layer_pre(params, g, &all, h.as_ref(), l, &mut pat);
        if !has_head && l == l_count - 1 {
            top = Some(apply_output(pre, params.output, &mut pat));
        } else {
            relu_in_place(&mut pre, &mut pat);
            h = Some(pre);
        }
    }
    let top = match &params.head {
        Some(head) => apply_output(h.unwrap().dot(head), params.output, &mut pat),
        None => top.unwrap(),
    };
    Ok(top)
}

fn full_layer_pre(
    params: &ModelParams,
    g: &AttributedGraph,
    all: &[usize],
    h: Option<&Array2<f64>>,
    l: usize,
    pat: &mut PatternAcc,
) -> Array2<f64> {
    let n = g.node_count();
    match params.arch {
        Architecture::Gcn => {
            let w = &params.layers[l].mats[0];
            let t = child_transform(g.features(), all, h, w.view());
            let mut pre = Array2::zeros((n, w.ncols()));
            for v in 0..n {
                let dv = g.degree(v) as f64 + 1.0;
                pre.row_mut(v).scaled_add(1.0 / dv, &t.row(v));
                for &u in g.neighbors(v) {
                    let du = g.degree(u as usize) as f64 + 1.0;
                    pre.row_mut(v)
                        .scaled_add(1.0 / (dv * du).sqrt(), &t.row(u as usize));
                }
            }
            pre
        }
        Architecture::Sage => {
            let w = &params.layers[l].mats[0];
            let f_in = w.nrows() / 2;
            let t_self = child_transform(g.features(), all, h, w.slice(s![..f_in, ..]));
            let t_agg = child_transform(g.features(), all, h, w.slice(s![f_in.., ..]));
            let mut pre = t_self;
            for v in 0..n {
                let deg = g.degree(v);
                if deg == 0 {
                    continue;
                }
                let inv = 1.0 / deg as f64;
                for &u in g.neighbors(v) {
                    pre.row_mut(v).scaled_add(inv, &t_agg.row(u as usize));
                }
            }
            pre
        }
        Architecture::Gin => {
            let w1 = &params.layers[l].mats[0];
            let w2 = &params.layers[l].mats[1];
            let t = child_transform(g.features(), all, h, w1.view());
            let mut z1 = t.clone();
            for v in 0..n {
                for &u in g.neighbors(v) {
                    z1.row_mut(v).scaled_add(1.0, &t.row(u as usize));
                }
            }
            relu_in_place(&mut z1, pat);
            z1.dot(w2)
        }
    }
}
