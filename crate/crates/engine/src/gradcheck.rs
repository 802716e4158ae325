//! Central finite-difference verification of the analytic gradients.
//!
//! Relu makes the loss piecewise smooth; a difference quotient straddling a
//! kink says nothing about the analytic gradient, so coordinates whose
//! perturbed evaluations leave the base activation pattern are skipped and
//! counted instead of failing the check.

use gnnlab_graph::FeatureMatrix;
use gnnlab_samplers::ComputationalGraph;

use crate::backward::{backward, loss_and_pattern};
use crate::error::EngineError;
use crate::loss::LossTarget;
use crate::params::{GradientRecord, ModelParams};

/// Model size cap; the check runs two forward passes per parameter.
pub const FINITE_DIFF_PARAM_LIMIT: usize = 200;

#[derive(Debug, Clone)]
pub struct WorstCoordinate {
    /// Which matrix the coordinate lives in, e.g. `layer1.mat0` or `head`.
    pub location: String,
    pub flat_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub worst: Option<WorstCoordinate>,
}

#[derive(Clone, Copy)]
enum Loc {
    Layer(usize, usize),
    Head,
}

fn loc_name(loc: Loc) -> String {
    match loc {
        Loc::Layer(i, j) => format!("layer{i}.mat{j}"),
        Loc::Head => "head".into(),
    }
}

fn grad_mat(g: &GradientRecord, loc: Loc) -> &ndarray::Array2<f64> {
    match loc {
        Loc::Layer(i, j) => &g.layers[i][j],
        Loc::Head => g.head.as_ref().unwrap(),
    }
}

fn param_coord(p: &ModelParams, loc: Loc, k: usize) -> f64 {
    let m = match loc {
        Loc::Layer(i, j) => &p.layers[i].mats[j],
        Loc::Head => p.head.as_ref().unwrap(),
    };
    m.as_slice().expect("weights are contiguous")[k]
}

fn set_coord(p: &mut ModelParams, loc: Loc, k: usize, value: f64) {
    let m = match loc {
        Loc::Layer(i, j) => &mut p.layers[i].mats[j],
        Loc::Head => p.head.as_mut().unwrap(),
    };
    m.as_slice_mut().expect("weights are contiguous")[k] = value;
}

/// Compares the analytic gradient against central differences with the given
/// step, coordinate by coordinate. Relative error uses
/// `|a - n| / max(1, |a|, |n|)`.
pub fn finite_diff_check(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
    target: &LossTarget,
    step: f64,
) -> Result<GradCheckReport, EngineError> {
    let count = params.param_count();
    if count > FINITE_DIFF_PARAM_LIMIT {
        return Err(EngineError::TooManyParams { count, limit: FINITE_DIFF_PARAM_LIMIT });
    }
    let analytic = backward(params, cg, features, target)?;
    finite_diff_check_record(params, cg, features, target, step, &analytic)
}

/// Same check against a caller-supplied gradient record, so a deliberately
/// wrong gradient can be shown to fail.
pub fn finite_diff_check_record(
    params: &ModelParams,
    cg: &ComputationalGraph,
    features: &FeatureMatrix,
    target: &LossTarget,
    step: f64,
    analytic: &GradientRecord,
) -> Result<GradCheckReport, EngineError> {
    let count = params.param_count();
    if count > FINITE_DIFF_PARAM_LIMIT {
        return Err(EngineError::TooManyParams { count, limit: FINITE_DIFF_PARAM_LIMIT });
    }
    assert!(step > 0.0, "finite-difference step must be positive");

    let (_, base_pattern) = loss_and_pattern(params, cg, features, target)?;

    let mut locs: Vec<Loc> = Vec::new();
    for (i, layer) in params.layers.iter().enumerate() {
        for j in 0..layer.mats.len() {
            locs.push(Loc::Layer(i, j));
        }
    }
    if params.head.is_some() {
        locs.push(Loc::Head);
    }

    let mut work = params.clone();
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut worst: Option<WorstCoordinate> = None;

    for &loc in &locs {
        let len = grad_mat(analytic, loc).len();
        for k in 0..len {
            let orig = param_coord(params, loc, k);
            set_coord(&mut work, loc, k, orig + step);
            let (loss_up, pat_up) = loss_and_pattern(&work, cg, features, target)?;
            set_coord(&mut work, loc, k, orig - step);
            let (loss_dn, pat_dn) = loss_and_pattern(&work, cg, features, target)?;
            set_coord(&mut work, loc, k, orig);

            if pat_up != base_pattern || pat_dn != base_pattern {
                skipped += 1;
                continue;
            }
            let numeric = (loss_up - loss_dn) / (2.0 * step);
            let a = grad_mat(analytic, loc).as_slice().unwrap()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            sum_rel += rel;
            checked += 1;
            if rel > max_rel {
                max_rel = rel;
                worst = Some(WorstCoordinate {
                    location: loc_name(loc),
                    flat_index: k,
                    analytic: a,
                    numeric,
                });
            }
        }
    }

    Ok(GradCheckReport {
        max_rel_error: max_rel,
        mean_rel_error: if checked > 0 { sum_rel / checked as f64 } else { 0.0 },
        checked,
        skipped_kinks: skipped,
        worst,
    })
}
