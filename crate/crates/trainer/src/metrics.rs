//! Per-epoch training records and their CSV rendering.

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    /// 0-based index of the subgraph draw this epoch trained on.
    pub subgraph_id: usize,
    /// Mean estimated loss over the epoch's minibatch steps.
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Mean raw estimator norm over the epoch's steps.
    pub grad_norm: f64,
    /// EMA (decay 0.9) of per-step estimator norms after the epoch.
    pub grad_norm_ema: f64,
    /// Wall-clock milliseconds for the epoch; 0 under deterministic mode.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The full-batch gradient norm was already at or below the threshold.
    ThresholdAtInit,
    /// The per-step norm EMA crossed the threshold at an epoch boundary.
    EmaBelowThreshold,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub rows: Vec<EpochRow>,
    /// Epochs completed before stopping.
    pub stop_epoch: usize,
    pub stop_reason: StopReason,
    /// Full-batch gradient norm at the initial parameters, when the loss
    /// admits one (classification); drives the threshold-at-init stop.
    pub initial_grad_norm: Option<f64>,
}

pub const METRICS_CSV_HEADER: &str =
    "epoch,subgraph_id,train_loss,train_acc,val_acc,test_acc,grad_norm,grad_norm_ema,wall_ms";

pub fn metrics_csv(rows: &[EpochRow]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.epoch,
            r.subgraph_id,
            r.train_loss,
            r.train_acc,
            r.val_acc,
            r.test_acc,
            r.grad_norm,
            r.grad_norm_ema,
            r.wall_ms
        ));
    }
    out
}
