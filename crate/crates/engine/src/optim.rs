//! Plain SGD and Adam on [`ModelParams`].

use ndarray::Array2;

use crate::params::{GradientRecord, ModelParams};

/// One vanilla gradient step: `w -= lr * g`.
pub fn sgd_step(params: &mut ModelParams, grad: &GradientRecord, lr: f64) {
    params.zip_apply(grad, |w, g| w.scaled_add(-lr, g));
}

/// Adam with bias correction.
pub struct AdamState {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let mut shapes = Vec::new();
        for layer in &params.layers {
            for m in &layer.mats {
                shapes.push(Array2::zeros(m.dim()));
            }
        }
        if let Some(h) = &params.head {
            shapes.push(Array2::zeros(h.dim()));
        }
        AdamState {
            m: shapes.clone(),
            v: shapes,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grad: &GradientRecord, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (beta1, beta2, eps) = (self.beta1, self.beta2, self.eps);
        let mut slot = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        params.zip_apply(grad, |w, g| {
            let m = &mut ms[slot];
            let v = &mut vs[slot];
            slot += 1;
            azip_update(w, g, m, v, beta1, beta2, eps, bc1, bc2, lr);
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn azip_update(
    w: &mut Array2<f64>,
    g: &Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
    lr: f64,
) {
    for (((wi, &gi), mi), vi) in w.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
        *mi = beta1 * *mi + (1.0 - beta1) * gi;
        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
        let m_hat = *mi / bc1;
        let v_hat = *vi / bc2;
        *wi -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
