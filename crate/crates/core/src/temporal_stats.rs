//! Window pooling, clip-level statistics and standardization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_features::AudioFrameFeatures;
use crate::visual_features::{rhythm_regularity, shot_switch_rate, visual_zcr, ShotTrack, VisualFrameFeatures};

pub const STD_FLOOR: f64 = 1e-12;
pub const STAT_SUFFIXES: [&str; 4] = ["med", "max", "min", "mean"];
pub const AUDIO_PREFIX: &str = "audio.";
pub const VISUAL_PREFIX: &str = "visual.";

#[derive(Debug, Error, PartialEq)]
pub enum TemporalError {
    #[error("clip lasts {duration:.3} s, shorter than one {window} s window")]
    TooShort { duration: f64, window: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

/// Pooling grid in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingGrid {
    pub window: f64,
    pub hop: f64,
}

impl Default for PoolingGrid {
    fn default() -> Self {
        PoolingGrid { window: 1.0, hop: 0.5 }
    }
}

impl PoolingGrid {
    pub fn window_count(&self, duration: f64) -> usize {
        if duration + 1e-9 < self.window {
            0
        } else {
            1 + ((duration - self.window) / self.hop + 1e-9).floor() as usize
        }
    }
}

/// Timing of the two frame grids being pooled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInfo {
    /// Seconds between audio frame starts.
    pub audio_hop: f64,
    pub video_fps: f64,
    /// Common clip duration covered by both modalities.
    pub duration: f64,
}

/// Window-level feature matrix for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatureSequence {
    pub clip_id: String,
    pub feature_names: Vec<String>,
    pub windows: Vec<Vec<f64>>,
}

impl FrameFeatureSequence {
    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Keep only the named columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FrameFeatureSequence {
        FrameFeatureSequence {
            clip_id: self.clip_id.clone(),
            feature_names: columns.iter().map(|&c| self.feature_names[c].clone()).collect(),
            windows: self
                .windows
                .iter()
                .map(|row| columns.iter().map(|&c| row[c]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

pub const VISUAL_NAMES: [&str; 6] = ["motion", "lighting", "color_energy", "shot_rate", "rhythm", "zcr"];

/// Names of the window-level features, audio first.
pub fn window_feature_names() -> Vec<String> {
    AudioFrameFeatures::names()
        .into_iter()
        .map(|n| format!("{AUDIO_PREFIX}{n}"))
        .chain(VISUAL_NAMES.iter().map(|n| format!("{VISUAL_PREFIX}{n}")))
        .collect()
}

/// Frames whose timestamps fall in `[start, end)`; falls back to the frame nearest
/// the window centre when none do.
fn frames_in(times: impl Fn(usize) -> f64, count: usize, start: f64, end: f64) -> Vec<usize> {
    let eps = 1e-9;
    let inside: Vec<usize> = (0..count)
        .filter(|&i| times(i) >= start - eps && times(i) < end - eps)
        .collect();
    if !inside.is_empty() || count == 0 {
        return inside;
    }
    let centre = 0.5 * (start + end);
    let nearest = (0..count)
        .min_by(|&a, &b| (times(a) - centre).abs().total_cmp(&(times(b) - centre).abs()))
        .expect("count > 0");
    vec![nearest]
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Average audio and visual frames onto the window grid. Unvoiced frames (pitch 0)
/// are left out of the pitch mean. Shot rate and rhythm regularity are clip-level
/// and repeated in every window; visual ZCR is computed per window over the luma
/// deltas of its frames.
pub fn pool_windows(
    clip_id: &str,
    audio: &[AudioFrameFeatures],
    visual: &[VisualFrameFeatures],
    shots: &ShotTrack,
    rate: &RateInfo,
    grid: &PoolingGrid,
) -> Result<FrameFeatureSequence, TemporalError> {
    if audio.is_empty() || visual.is_empty() {
        return Err(TemporalError::EmptyInput);
    }
    let count = grid.window_count(rate.duration);
    if count == 0 {
        return Err(TemporalError::TooShort {
            duration: rate.duration,
            window: grid.window,
        });
    }
    let switch_rate = shot_switch_rate(shots, visual.len() as f64 / rate.video_fps);
    let rhythm = rhythm_regularity(shots);
    let audio_rows: Vec<Vec<f64>> = audio.iter().map(AudioFrameFeatures::to_vec).collect();

    let windows = (0..count)
        .map(|w| {
            let start = w as f64 * grid.hop;
            let end = start + grid.window;
            let a_idx = frames_in(|i| i as f64 * rate.audio_hop, audio.len(), start, end);
            let v_idx = frames_in(|j| j as f64 / rate.video_fps, visual.len(), start, end);

            let mut row = Vec::with_capacity(AudioFrameFeatures::DIM + VISUAL_NAMES.len());
            row.push(mean(a_idx.iter().map(|&i| audio[i].pitch_hz).filter(|&p| p > 0.0)));
            for d in 1..AudioFrameFeatures::DIM {
                row.push(mean(a_idx.iter().map(|&i| audio_rows[i][d])));
            }
            row.push(mean(v_idx.iter().map(|&j| visual[j].motion_intensity)));
            row.push(mean(v_idx.iter().map(|&j| visual[j].lighting)));
            row.push(mean(v_idx.iter().map(|&j| visual[j].color_energy)));
            row.push(switch_rate);
            row.push(rhythm);
            let deltas: Vec<f64> = v_idx.iter().filter(|&&j| j > 0).map(|&j| visual[j].luma_delta).collect();
            row.push(visual_zcr(&deltas));
            row
        })
        .collect();

    Ok(FrameFeatureSequence {
        clip_id: clip_id.to_string(),
        feature_names: window_feature_names(),
        windows,
    })
}

/// Lower median, maximum, minimum and mean of every column.
pub fn clip_stats(seq: &FrameFeatureSequence) -> Result<ClipFeatureVector, TemporalError> {
    if seq.windows.is_empty() {
        return Err(TemporalError::EmptyInput);
    }
    let dim = seq.dim();
    let mut names = Vec::with_capacity(4 * dim);
    let mut values = Vec::with_capacity(4 * dim);
    for (d, base) in seq.feature_names.iter().enumerate() {
        let mut column: Vec<f64> = seq.windows.iter().map(|row| row[d]).collect();
        column.sort_by(f64::total_cmp);
        let n = column.len();
        let stats = [
            column[(n - 1) / 2],
            column[n - 1],
            column[0],
            column.iter().sum::<f64>() / n as f64,
        ];
        for (suffix, v) in STAT_SUFFIXES.iter().zip(stats) {
            names.push(format!("{base}.{suffix}"));
            values.push(v);
        }
    }
    Ok(ClipFeatureVector { names, values })
}

/// Map a clip-statistic name (`audio.pitch.med`) to its window feature (`audio.pitch`).
pub fn base_feature_name(stat_name: &str) -> &str {
    match stat_name.rsplit_once('.') {
        Some((base, suffix)) if STAT_SUFFIXES.contains(&suffix) => base,
        _ => stat_name,
    }
}

/// Per-dimension z-scoring fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self, TemporalError> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let first = rows.first().ok_or(TemporalError::EmptyInput)?;
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(TemporalError::Inconsistent("rows differ in length".into()));
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let std = (0..dim)
            .map(|d| (rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s < STD_FLOOR { 0.0 } else { (v - m) / s })
            .collect()
    }
}

/// Standardized training rows, standardized held-out rows, and the fitted scaler.
pub type Standardized = (Vec<Vec<f64>>, Vec<Vec<f64>>, Standardizer);

/// Fit on `train`, then z-score both sets.
pub fn standardize(
    train: &[Vec<f64>],
    apply_to: &[Vec<f64>],
) -> Result<Standardized, TemporalError> {
    let scaler = Standardizer::fit(train.iter().map(Vec::as_slice))?;
    let train_z = train.iter().map(|r| scaler.transform(r)).collect();
    let apply_z = apply_to.iter().map(|r| scaler.transform(r)).collect();
    Ok((train_z, apply_z, scaler))
}
