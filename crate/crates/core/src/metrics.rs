//! Regression quality measures: R², Pearson correlation, mean linear (absolute)
//! error and Bhattacharyya distance between prediction and label histograms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BD_BINS: usize = 10;
pub const BD_RANGE: (f64, f64) = (-2.25, 2.25);
pub const BC_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("ground truth is constant")]
    DegenerateTruth,
    #[error("input is constant")]
    DegenerateInput,
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} predictions, {1} labels")]
    LengthMismatch(usize, usize),
    #[error("need at least {0} samples")]
    TooFew(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub r2: f64,
    pub cc: f64,
    pub mle: f64,
    pub bd: f64,
}

fn check(pred: &[f64], truth: &[f64], min: usize) -> Result<(), MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if pred.len() < min {
        return Err(MetricError::TooFew(min));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check(pred, truth, 2)?;
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - m).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::DegenerateTruth);
    }
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn pearson_cc(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check(pred, truth, 2)?;
    let (mp, mt) = (mean(pred), mean(truth));
    let (mut spt, mut spp, mut stt) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mp, t - mt);
        spt += dp * dt;
        spp += dp * dp;
        stt += dt * dt;
    }
    if spp == 0.0 || stt == 0.0 {
        return Err(MetricError::DegenerateInput);
    }
    Ok((spt / (spp * stt).sqrt()).clamp(-1.0, 1.0))
}

pub fn mean_linear_error(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    check(pred, truth, 1)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

fn bin_counts(values: &[f64]) -> [f64; BD_BINS] {
    let (lo, hi) = BD_RANGE;
    let width = (hi - lo) / BD_BINS as f64;
    let mut counts = [0.0; BD_BINS];
    for &v in values {
        let bin = ((v.clamp(lo, hi) - lo) / width).floor() as usize;
        counts[bin.min(BD_BINS - 1)] += 1.0;
    }
    counts
}

/// Normalized histogram over the fixed label range; out-of-range values land in the end bins.
pub fn label_histogram(values: &[f64]) -> [f64; BD_BINS] {
    let n = values.len() as f64;
    bin_counts(values).map(|c| c / n)
}

pub fn bhattacharyya_distance(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    if pred.is_empty() || truth.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    // Working on integer counts keeps BC exactly 1 for identical histograms.
    let (p, q) = (bin_counts(pred), bin_counts(truth));
    let overlap: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
    let bc = overlap / (pred.len() as f64 * truth.len() as f64).sqrt();
    Ok((-bc.max(BC_FLOOR).ln()).max(0.0))
}

pub fn metric_set(pred: &[f64], truth: &[f64]) -> Result<MetricSet, MetricError> {
    Ok(MetricSet {
        r2: r_squared(pred, truth)?,
        cc: pearson_cc(pred, truth)?,
        mle: mean_linear_error(pred, truth)?,
        bd: bhattacharyya_distance(pred, truth)?,
    })
}
