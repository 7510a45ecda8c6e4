//! Correlation-based feature selection.
//!
//! Subsets are scored by the merit heuristic
//! `k * mean(r_cf) / sqrt(k + k(k-1) * mean(|r_ff|))`, which rewards features
//! that track the targets and penalizes features that track each other.
//! Search is greedy forward selection starting from the empty set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CAP: usize = 20;
const MERIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CfsError {
    #[error("need at least 3 samples, got {0}")]
    InsufficientData(usize),
    #[error("subset is empty")]
    EmptySubset,
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTables {
    /// Feature-class correlation, averaged over both targets in absolute value.
    pub r_fc: Vec<f64>,
    /// Feature-feature Pearson correlation, row-major `D x D`.
    pub r_ff: Vec<Vec<f64>>,
}

impl CorrelationTables {
    pub fn dim(&self) -> usize {
        self.r_fc.len()
    }
}

/// Sample Pearson correlation, or `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Build correlation tables from an `N x D` sample matrix and both targets.
pub fn correlation_tables(
    x: &[Vec<f64>],
    y_arousal: &[f64],
    y_valence: &[f64],
) -> Result<CorrelationTables, CfsError> {
    let n = x.len();
    if n < 3 {
        return Err(CfsError::InsufficientData(n));
    }
    if y_arousal.len() != n || y_valence.len() != n {
        return Err(CfsError::Inconsistent("target length differs from sample count".into()));
    }
    let dim = x[0].len();
    if x.iter().any(|row| row.len() != dim) {
        return Err(CfsError::Inconsistent("ragged sample matrix".into()));
    }
    let columns: Vec<Vec<f64>> = (0..dim).map(|d| x.iter().map(|row| row[d]).collect()).collect();

    let r_fc = columns
        .iter()
        .map(|c| {
            let ra = pearson(c, y_arousal).unwrap_or(0.0).abs();
            let rv = pearson(c, y_valence).unwrap_or(0.0).abs();
            0.5 * (ra + rv)
        })
        .collect();

    let mut r_ff = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        r_ff[i][i] = 1.0;
        for j in i + 1..dim {
            let r = pearson(&columns[i], &columns[j]).unwrap_or(0.0);
            r_ff[i][j] = r;
            r_ff[j][i] = r;
        }
    }
    Ok(CorrelationTables { r_fc, r_ff })
}

/// Merit of `subset`.
pub fn merit(subset: &[usize], tables: &CorrelationTables) -> Result<f64, CfsError> {
    let k = subset.len();
    if k == 0 {
        return Err(CfsError::EmptySubset);
    }
    let kf = k as f64;
    let mean_cf = subset.iter().map(|&j| tables.r_fc[j]).sum::<f64>() / kf;
    let mean_ff = if k < 2 {
        0.0
    } else {
        let mut sum = 0.0;
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                sum += tables.r_ff[i][j].abs();
            }
        }
        sum / (kf * (kf - 1.0) / 2.0)
    };
    let denom = (kf + kf * (kf - 1.0) * mean_ff).max(MERIT_FLOOR);
    Ok(kf * mean_cf / denom.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeatureSet {
    pub indices: Vec<usize>,
    pub names: Vec<String>,
    /// Merit after each addition.
    pub merit_trace: Vec<f64>,
    /// Number of features chosen before merit stopped improving; entries past
    /// this point were added only to reach the cap.
    pub plateau_at: Option<usize>,
}

/// Best single-feature expansion of `current`: highest merit, lowest index on ties.
pub fn best_expansion(current: &[usize], tables: &CorrelationTables) -> Option<(usize, f64)> {
    let mut candidate = current.to_vec();
    candidate.push(0);
    let mut best: Option<(usize, f64)> = None;
    for j in 0..tables.dim() {
        if current.contains(&j) {
            continue;
        }
        *candidate.last_mut().expect("nonempty") = j;
        let m = merit(&candidate, tables).expect("nonempty subset");
        if best.is_none_or(|(_, bm)| m > bm) {
            best = Some((j, m));
        }
    }
    best
}

/// Greedy forward search up to `cap` features. Once no expansion improves merit the
/// search keeps adding the best expansion anyway until `cap` (or every feature) is
/// taken, and records where the plateau began.
pub fn greedy_forward_select(tables: &CorrelationTables, names: &[String], cap: usize) -> SelectedFeatureSet {
    let target = cap.min(tables.dim());
    let mut indices = Vec::with_capacity(target);
    let mut merit_trace = Vec::with_capacity(target);
    let mut plateau_at = None;
    while indices.len() < target {
        let (j, m) = best_expansion(&indices, tables).expect("unused features remain");
        if plateau_at.is_none() && merit_trace.last().is_some_and(|&prev| m <= prev) {
            plateau_at = Some(indices.len());
        }
        indices.push(j);
        merit_trace.push(m);
    }
    SelectedFeatureSet {
        names: indices.iter().map(|&i| names[i].clone()).collect(),
        indices,
        merit_trace,
        plateau_at,
    }
}

/// On-disk form of one fold's selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub fold: usize,
    pub indices: Vec<usize>,
    pub names: Vec<String>,
    pub merit_trace: Vec<f64>,
    pub plateau_at: Option<usize>,
}

impl SelectionRecord {
    pub fn new(fold: usize, set: &SelectedFeatureSet) -> Self {
        SelectionRecord {
            fold,
            indices: set.indices.clone(),
            names: set.names.clone(),
            merit_trace: set.merit_trace.clone(),
            plateau_at: set.plateau_at,
        }
    }
}
