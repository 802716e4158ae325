//! Training objectives and their gradients with respect to model outputs.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::EngineError;

/// Numerically stable logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// What the backward pass should differentiate, with targets aligned to the
/// computational graph's seeds (indices below are positions in the seed
/// list, not node ids).
#[derive(Debug, Clone)]
pub enum LossTarget<'a> {
    /// Mean negative log-likelihood over the seeds; requires log-softmax
    /// outputs and one class label per seed.
    Nll { labels: &'a [i64] },
    /// Mean link-prediction loss over positive pairs with per-pair negative
    /// seed lists, on raw embedding outputs.
    NegSample {
        pairs: &'a [(usize, usize)],
        negatives: &'a [Vec<usize>],
    },
}

/// Mean negative log-likelihood of `labels` under per-row log-probabilities,
/// plus the gradient with respect to the log-probabilities.
pub fn nll_loss(
    logp: ArrayView2<f64>,
    labels: &[i64],
) -> Result<(f64, Array2<f64>), EngineError> {
    let (n, classes) = logp.dim();
    if labels.len() != n {
        return Err(EngineError::DimMismatch(format!(
            "{n} output rows but {} labels",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(EngineError::DimMismatch("empty batch".into()));
    }
    for (row, r) in logp.rows().into_iter().enumerate() {
        let psum: f64 = r.iter().map(|&x| x.exp()).sum();
        if (psum - 1.0).abs() > 1e-6 {
            return Err(EngineError::NotLogProbs { row, sum: psum });
        }
    }
    let mut loss = 0.0;
    let mut grad = Array2::zeros((n, classes));
    let inv = 1.0 / n as f64;
    for (i, &y) in labels.iter().enumerate() {
        if y < 0 || y as usize >= classes {
            return Err(EngineError::LabelOutOfRange { label: y, classes });
        }
        loss -= logp[[i, y as usize]];
        grad[[i, y as usize]] = -inv;
    }
    Ok((loss * inv, grad))
}

/// Link-prediction objective: for each positive pair `(v, u)` with negatives
/// `w`, the loss is `-ln sigma(z_v . z_u) - sum_w ln sigma(-z_v . z_w)`,
/// averaged over pairs. Indices address rows of `emb`. Returns the loss and
/// its gradient with respect to every embedding row.
pub fn negsample_loss(
    emb: ArrayView2<f64>,
    pairs: &[(usize, usize)],
    negatives: &[Vec<usize>],
) -> Result<(f64, Array2<f64>), EngineError> {
    let n = emb.nrows();
    if pairs.is_empty() {
        return Err(EngineError::DimMismatch("no positive pairs".into()));
    }
    if negatives.len() != pairs.len() {
        return Err(EngineError::DimMismatch(format!(
            "{} pairs but {} negative lists",
            pairs.len(),
            negatives.len()
        )));
    }
    let check = |i: usize| -> Result<(), EngineError> {
        if i >= n {
            Err(EngineError::DimMismatch(format!(
                "pair index {i} out of range for {n} embedding rows"
            )))
        } else {
            Ok(())
        }
    };
    let inv = 1.0 / pairs.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(emb.dim());
    for (&(v, u), negs) in pairs.iter().zip(negatives) {
        check(v)?;
        check(u)?;
        let s_pos: f64 = emb.row(v).dot(&emb.row(u));
        loss += softplus(-s_pos);
        let g_pos = (sigmoid(s_pos) - 1.0) * inv;
        grad.row_mut(v).scaled_add(g_pos, &emb.row(u));
        grad.row_mut(u).scaled_add(g_pos, &emb.row(v));
        for &w in negs {
            check(w)?;
            let s_neg: f64 = emb.row(v).dot(&emb.row(w));
            loss += softplus(s_neg);
            let g_neg = sigmoid(s_neg) * inv;
            grad.row_mut(v).scaled_add(g_neg, &emb.row(w));
            grad.row_mut(w).scaled_add(g_neg, &emb.row(v));
        }
    }
    Ok((loss * inv, grad))
}

/// Column mean of the embedding rows: the whole-batch readout.
pub fn readout_mean(emb: ArrayView2<f64>) -> Array1<f64> {
    let n = emb.nrows().max(1) as f64;
    let mut out = Array1::zeros(emb.ncols());
    for row in emb.rows() {
        out.scaled_add(1.0 / n, &row);
    }
    out
}
