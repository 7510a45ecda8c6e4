//! Per-frame visual descriptors and shot structure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_features::zero_crossing_rate;
use crate::ingest::{Frame, FrameSequence};

pub const MOTION_BLOCK: usize = 16;
pub const MOTION_SEARCH: i64 = 8;
pub const HISTOGRAM_BINS: usize = 32;
pub const CUT_THRESHOLD: f64 = 0.5;
pub const MIN_SHOT_FRAMES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum VisualFeatureError {
    #[error("frame planes have {got} pixels, expected {expected}")]
    DimensionError { expected: usize, got: usize },
}

/// Shot-boundary detection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutParams {
    pub threshold: f64,
    pub min_shot_frames: usize,
}

impl Default for CutParams {
    fn default() -> Self {
        CutParams {
            threshold: CUT_THRESHOLD,
            min_shot_frames: MIN_SHOT_FRAMES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualFrameFeatures {
    pub motion_intensity: f64,
    pub lighting: f64,
    pub color_energy: f64,
    pub shot_cut: bool,
    /// Mean luma of this frame minus that of the previous one (0 for the first frame).
    pub luma_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTrack {
    pub cut_indices: Vec<usize>,
    pub shot_lengths: Vec<f64>,
}

/// Best block match for one macroblock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatch {
    pub dx: i64,
    pub dy: i64,
    /// Mean absolute luma difference at the best displacement.
    pub residual: f64,
}

fn check_dims(frame: &Frame, expected: usize) -> Result<(), VisualFeatureError> {
    for plane in [&frame.y, &frame.cb, &frame.cr] {
        if plane.len() != expected {
            return Err(VisualFeatureError::DimensionError {
                expected,
                got: plane.len(),
            });
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn block_sad(prev: &[u8], cur: &[u8], width: usize, bx: usize, by: usize, bw: usize, bh: usize, dx: i64, dy: i64) -> u64 {
    let mut sad = 0u64;
    for row in 0..bh {
        let cy = by + row;
        let py = (cy as i64 + dy) as usize;
        let cur_row = &cur[cy * width + bx..cy * width + bx + bw];
        let px = (bx as i64 + dx) as usize;
        let prev_row = &prev[py * width + px..py * width + px + bw];
        sad += cur_row
            .iter()
            .zip(prev_row)
            .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
            .sum::<u64>();
    }
    sad
}

/// Exhaustive block matching of `frame` against `prev_frame` on the luma plane.
///
/// Blocks tile the picture (edge blocks are truncated). A candidate
/// displacement is admissible when the displaced block lies fully inside the
/// previous frame. Ties keep the candidate found first, scanning outward from
/// the zero vector by increasing `|dx| + |dy|`.
pub fn block_matches(
    prev_frame: &Frame,
    frame: &Frame,
    width: usize,
    height: usize,
) -> Result<Vec<BlockMatch>, VisualFeatureError> {
    check_dims(prev_frame, width * height)?;
    check_dims(frame, width * height)?;

    let mut candidates: Vec<(i64, i64)> = (-MOTION_SEARCH..=MOTION_SEARCH)
        .flat_map(|dy| (-MOTION_SEARCH..=MOTION_SEARCH).map(move |dx| (dx, dy)))
        .collect();
    candidates.sort_by_key(|&(dx, dy)| (dx.abs() + dy.abs(), dy, dx));

    let mut out = Vec::new();
    for by in (0..height).step_by(MOTION_BLOCK) {
        for bx in (0..width).step_by(MOTION_BLOCK) {
            let bw = MOTION_BLOCK.min(width - bx);
            let bh = MOTION_BLOCK.min(height - by);
            let mut best: Option<(u64, i64, i64)> = None;
            for &(dx, dy) in &candidates {
                let (x0, y0) = (bx as i64 + dx, by as i64 + dy);
                if x0 < 0 || y0 < 0 || x0 + bw as i64 > width as i64 || y0 + bh as i64 > height as i64 {
                    continue;
                }
                let sad = block_sad(&prev_frame.y, &frame.y, width, bx, by, bw, bh, dx, dy);
                if best.is_none_or(|(b, _, _)| sad < b) {
                    best = Some((sad, dx, dy));
                }
            }
            // The zero vector is always admissible.
            let (sad, dx, dy) = best.expect("zero displacement admissible");
            out.push(BlockMatch {
                dx,
                dy,
                residual: sad as f64 / (bw * bh) as f64,
            });
        }
    }
    Ok(out)
}

/// Mean block-matching residual over all blocks, per pixel.
pub fn motion_intensity(
    prev_frame: &Frame,
    frame: &Frame,
    width: usize,
    height: usize,
) -> Result<f64, VisualFeatureError> {
    let matches = block_matches(prev_frame, frame, width, height)?;
    // Weight by block area so truncated edge blocks count for what they cover.
    let mut total = 0.0;
    let mut idx = 0;
    for by in (0..height).step_by(MOTION_BLOCK) {
        for bx in (0..width).step_by(MOTION_BLOCK) {
            let area = MOTION_BLOCK.min(width - bx) * MOTION_BLOCK.min(height - by);
            total += matches[idx].residual * area as f64;
            idx += 1;
        }
    }
    Ok(total / (width * height) as f64)
}

/// Mean luma.
pub fn lighting(frame: &Frame) -> f64 {
    if frame.y.is_empty() {
        return 0.0;
    }
    frame.y.iter().map(|&v| v as f64).sum::<f64>() / frame.y.len() as f64
}

/// Mean of chroma saturation times brightness over all pixels.
pub fn color_energy(frame: &Frame) -> f64 {
    if frame.y.is_empty() {
        return 0.0;
    }
    let total: f64 = frame
        .y
        .iter()
        .zip(&frame.cb)
        .zip(&frame.cr)
        .map(|((&y, &cb), &cr)| {
            let (u, v) = (cb as f64 - 128.0, cr as f64 - 128.0);
            (u * u + v * v).sqrt() / 128.0 * (y as f64 / 255.0)
        })
        .sum();
    total / frame.y.len() as f64
}

/// Normalized 32-bin luma histogram.
pub fn luma_histogram(frame: &Frame) -> [f64; HISTOGRAM_BINS] {
    let mut hist = [0.0; HISTOGRAM_BINS];
    if frame.y.is_empty() {
        return hist;
    }
    for &v in &frame.y {
        hist[v as usize * HISTOGRAM_BINS / 256] += 1.0;
    }
    let n = frame.y.len() as f64;
    hist.iter_mut().for_each(|h| *h /= n);
    hist
}

pub fn histogram_distance(a: &[f64; HISTOGRAM_BINS], b: &[f64; HISTOGRAM_BINS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Histogram-difference shot boundary detection.
///
/// A cut lands on frame `t` when the L1 distance between the histograms of
/// frames `t-1` and `t` exceeds the threshold. Shots shorter than the minimum
/// are not allowed: a candidate closer than that to the previous cut replaces
/// it, and candidates too close to the clip start are dropped.
pub fn detect_cuts(seq: &FrameSequence, params: &CutParams) -> ShotTrack {
    let hists: Vec<_> = seq.frames.iter().map(luma_histogram).collect();
    let mut cuts: Vec<usize> = Vec::new();
    for t in 1..hists.len() {
        if histogram_distance(&hists[t - 1], &hists[t]) <= params.threshold {
            continue;
        }
        match cuts.last_mut() {
            Some(last) if t - *last < params.min_shot_frames => *last = t,
            None if t < params.min_shot_frames => {}
            _ => cuts.push(t),
        }
    }
    let shot_lengths = shot_lengths(&cuts, seq.frames.len(), seq.frame_rate);
    ShotTrack {
        cut_indices: cuts,
        shot_lengths,
    }
}

fn shot_lengths(cuts: &[usize], n_frames: usize, frame_rate: f64) -> Vec<f64> {
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(cuts);
    bounds.push(n_frames);
    bounds
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / frame_rate)
        .collect()
}

/// Cuts per second.
pub fn shot_switch_rate(track: &ShotTrack, duration: f64) -> f64 {
    if duration <= 0.0 {
        return 0.0;
    }
    track.cut_indices.len() as f64 / duration
}

/// `1 / (1 + CV)` of shot lengths, with population standard deviation.
pub fn rhythm_regularity(track: &ShotTrack) -> f64 {
    let lengths = &track.shot_lengths;
    if lengths.len() < 2 {
        return 1.0;
    }
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return 1.0;
    }
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    1.0 / (1.0 + var.sqrt() / mean)
}

/// Zero crossing rate of the mean-centred luma-delta signal.
pub fn visual_zcr(luma_delta: &[f64]) -> f64 {
    if luma_delta.is_empty() {
        return 0.0;
    }
    let mean = luma_delta.iter().sum::<f64>() / luma_delta.len() as f64;
    let centred: Vec<f64> = luma_delta.iter().map(|d| d - mean).collect();
    zero_crossing_rate(&centred)
}

/// Per-frame features for a whole clip, plus its shot track.
pub fn extract_visual_frames(
    seq: &FrameSequence,
    params: &CutParams,
) -> Result<(Vec<VisualFrameFeatures>, ShotTrack), VisualFeatureError> {
    let n = seq.width * seq.height;
    for frame in &seq.frames {
        check_dims(frame, n)?;
    }
    let track = detect_cuts(seq, params);
    let lights: Vec<f64> = seq.frames.iter().map(lighting).collect();

    let motions: Vec<f64> = {
        use rayon::prelude::*;
        (0..seq.frames.len())
            .into_par_iter()
            .map(|t| {
                if t == 0 {
                    Ok(0.0)
                } else {
                    motion_intensity(&seq.frames[t - 1], &seq.frames[t], seq.width, seq.height)
                }
            })
            .collect::<Result<_, _>>()?
    };

    let features = seq
        .frames
        .iter()
        .enumerate()
        .map(|(t, frame)| VisualFrameFeatures {
            motion_intensity: motions[t],
            lighting: lights[t],
            color_energy: color_energy(frame),
            shot_cut: track.cut_indices.binary_search(&t).is_ok(),
            luma_delta: if t == 0 { 0.0 } else { lights[t] - lights[t - 1] },
        })
        .collect();
    Ok((features, track))
}
