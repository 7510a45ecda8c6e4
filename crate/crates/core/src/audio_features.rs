//! Short-time audio descriptors: pitch, energy, zero crossing rate, MFCC 1-12,
//! three formants and eight PLP cepstra per analysis frame.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{self, fft_size, hann, levinson_durbin, lpc_response_power, lpc_to_cepstrum, parabolic_offset};
use crate::ingest::AudioTrack;

pub const PITCH_MIN_HZ: f64 = 60.0;
pub const PITCH_MAX_HZ: f64 = 500.0;
pub const VOICING_THRESHOLD: f64 = 0.3;
pub const MEL_FILTERS: usize = 26;
pub const MFCC_COUNT: usize = 12;
pub const LOG_FLOOR: f64 = 1e-10;
pub const FORMANT_COUNT: usize = 3;
pub const FORMANT_GRID: usize = 512;
pub const BARK_FILTERS: usize = 17;
pub const PLP_ORDER: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum AudioFeatureError {
    #[error("signal has {samples} samples, analysis window needs {window}")]
    TooShort { samples: usize, window: usize },
    #[error("invalid window plan: {0}")]
    InvalidPlan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowFunction {
    #[default]
    Hann,
}

/// Short-time framing parameters, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_length: f64,
    pub hop: f64,
    #[serde(default)]
    pub window_function: WindowFunction,
}

impl Default for WindowPlan {
    fn default() -> Self {
        WindowPlan {
            window_length: 0.025,
            hop: 0.010,
            window_function: WindowFunction::Hann,
        }
    }
}

impl WindowPlan {
    pub fn validate(&self) -> Result<(), AudioFeatureError> {
        if !(self.hop > 0.0 && self.hop <= self.window_length) {
            return Err(AudioFeatureError::InvalidPlan(format!(
                "need 0 < hop ({}) <= window_length ({})",
                self.hop, self.window_length
            )));
        }
        Ok(())
    }

    /// Window and hop lengths in samples.
    pub fn samples(&self, sample_rate: u32) -> (usize, usize) {
        let sr = sample_rate as f64;
        let len = (self.window_length * sr).round().max(1.0) as usize;
        let hop = (self.hop * sr).round().max(1.0) as usize;
        (len, hop)
    }
}

/// Number of full frames of length `len` at stride `hop` in `n` samples.
pub fn frame_count(n: usize, len: usize, hop: usize) -> usize {
    if n < len {
        0
    } else {
        1 + (n - len) / hop
    }
}

/// Hann-weighted copies of every full analysis window.
pub fn frame_signal(track: &AudioTrack, plan: &WindowPlan) -> Result<Vec<Vec<f64>>, AudioFeatureError> {
    plan.validate()?;
    let (len, hop) = plan.samples(track.sample_rate);
    let count = frame_count(track.samples.len(), len, hop);
    if count == 0 {
        return Err(AudioFeatureError::TooShort {
            samples: track.samples.len(),
            window: len,
        });
    }
    let window = hann(len);
    Ok((0..count)
        .map(|i| {
            track.samples[i * hop..i * hop + len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}

/// Minimum block length for the full pitch search band.
pub fn pitch_block_len(sample_rate: u32) -> usize {
    (2.0 * sample_rate as f64 / PITCH_MIN_HZ).ceil() as usize
}

/// Normalized cross-correlation between `x[..n-lag]` and `x[lag..]`.
fn normalized_lag_correlation(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    if lag >= n {
        return 0.0;
    }
    let (head, tail) = (&x[..n - lag], &x[lag..]);
    let cross: f64 = head.iter().zip(tail).map(|(a, b)| a * b).sum();
    let e0: f64 = head.iter().map(|v| v * v).sum();
    let e1: f64 = tail.iter().map(|v| v * v).sum();
    let denom = (e0 * e1).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

/// Fundamental frequency by autocorrelation peak picking over 60-500 Hz.
/// Returns 0 for unvoiced blocks.
pub fn pitch(block: &[f64], sample_rate: u32) -> f64 {
    let sr = sample_rate as f64;
    let min_lag = ((sr / PITCH_MAX_HZ).floor() as usize).max(2);
    let max_lag = ((sr / PITCH_MIN_HZ).ceil() as usize).min(block.len() / 2);
    if max_lag <= min_lag {
        return 0.0;
    }
    // One extra lag on each side feeds the parabolic fit at the band edges.
    let ncc: Vec<f64> = (min_lag - 1..=max_lag + 1)
        .map(|lag| normalized_lag_correlation(block, lag))
        .collect();
    let at = |lag: usize| ncc[lag + 1 - min_lag];

    let (best_lag, best) = (min_lag..=max_lag)
        .map(|lag| (lag, at(lag)))
        .fold((min_lag, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if !(best >= VOICING_THRESHOLD) {
        return 0.0;
    }
    // Period multiples correlate almost as well as the period itself; take the
    // shortest lag whose local peak is within 10% of the global one.
    let lag = (min_lag..=max_lag)
        .find(|&lag| at(lag) >= 0.9 * best && at(lag) >= at(lag - 1) && at(lag) >= at(lag + 1))
        .unwrap_or(best_lag);
    let refined = lag as f64 + parabolic_offset(at(lag - 1), at(lag), at(lag + 1));
    sr / refined
}

/// Root mean square amplitude.
pub fn energy(block: &[f64]) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    (block.iter().map(|v| v * v).sum::<f64>() / block.len() as f64).sqrt()
}

/// Strict sign changes between consecutive samples divided by `len - 1`.
pub fn zero_crossing_rate(block: &[f64]) -> f64 {
    if block.len() < 2 {
        return 0.0;
    }
    let crossings = block
        .windows(2)
        .filter(|w| (w[0] > 0.0 && w[1] < 0.0) || (w[0] < 0.0 && w[1] > 0.0))
        .count();
    crossings as f64 / (block.len() - 1) as f64
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangle edge frequencies: `MEL_FILTERS + 2` points equally spaced in mel from 0 to Nyquist.
pub fn mel_edges(sample_rate: u32) -> Vec<f64> {
    let top = hz_to_mel(sample_rate as f64 / 2.0);
    (0..MEL_FILTERS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (MEL_FILTERS + 1) as f64))
        .collect()
}

fn triangle(f: f64, lo: f64, centre: f64, hi: f64) -> f64 {
    if f <= lo || f >= hi {
        0.0
    } else if f <= centre {
        (f - lo) / (centre - lo)
    } else {
        (hi - f) / (hi - centre)
    }
}

/// Mel filter outputs over the magnitude spectrum of `block`.
pub fn mel_filter_energies(block: &[f64], sample_rate: u32) -> Vec<f64> {
    let n_fft = fft_size(block.len());
    let magnitude: Vec<f64> = dsp::power_spectrum(block, n_fft).into_iter().map(f64::sqrt).collect();
    let edges = mel_edges(sample_rate);
    let bin_hz = sample_rate as f64 / n_fft as f64;
    (0..MEL_FILTERS)
        .map(|j| {
            magnitude
                .iter()
                .enumerate()
                .map(|(k, m)| m * triangle(k as f64 * bin_hz, edges[j], edges[j + 1], edges[j + 2]))
                .sum()
        })
        .collect()
}

/// Orthonormal DCT-II coefficient `k` of `v`.
fn dct2(v: &[f64], k: usize) -> f64 {
    let m = v.len() as f64;
    let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
    scale
        * v.iter()
            .enumerate()
            .map(|(i, x)| x * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
            .sum::<f64>()
}

/// Cepstral coefficients 1..=12 of the log mel spectrum (c0 dropped).
pub fn mfcc12(block: &[f64], sample_rate: u32) -> [f64; MFCC_COUNT] {
    let log_mel: Vec<f64> = mel_filter_energies(block, sample_rate)
        .into_iter()
        .map(|e| e.max(LOG_FLOOR).ln())
        .collect();
    std::array::from_fn(|i| dct2(&log_mel, i + 1))
}

pub fn formant_lpc_order(sample_rate: u32) -> usize {
    2 + sample_rate as usize / 1000
}

/// First three spectral-envelope peaks of the LPC model, ascending, in Hz.
/// Missing peaks are reported as 0.
pub fn formants(block: &[f64], sample_rate: u32) -> [f64; FORMANT_COUNT] {
    let mut out = [0.0; FORMANT_COUNT];
    let order = formant_lpc_order(sample_rate).min(block.len().saturating_sub(1));
    if order == 0 {
        return out;
    }
    let r = dsp::autocorrelation(block, order);
    let Some(lpc) = levinson_durbin(&r, order) else {
        return out;
    };
    let nyquist = sample_rate as f64 / 2.0;
    let step = nyquist / FORMANT_GRID as f64;
    // Log envelope, up to the constant gain term.
    let env: Vec<f64> = (0..FORMANT_GRID)
        .map(|i| {
            let f = (i as f64 + 0.5) * step;
            -lpc_response_power(&lpc.coeffs, 2.0 * PI * f / sample_rate as f64).max(f64::MIN_POSITIVE).ln()
        })
        .collect();
    let mut found = 0;
    for i in 1..FORMANT_GRID - 1 {
        if env[i] > env[i - 1] && env[i] >= env[i + 1] {
            let offset = parabolic_offset(env[i - 1], env[i], env[i + 1]);
            out[found] = (i as f64 + 0.5 + offset) * step;
            found += 1;
            if found == FORMANT_COUNT {
                break;
            }
        }
    }
    out
}

pub fn hz_to_bark(f: f64) -> f64 {
    6.0 * (f / 600.0).asinh()
}

/// Critical-band masking curve as a function of Bark distance from the band centre.
pub fn bark_band_weight(dz: f64) -> f64 {
    if !(-1.3..=2.5).contains(&dz) {
        0.0
    } else if dz < -0.5 {
        10f64.powf(2.5 * (dz + 0.5))
    } else if dz <= 0.5 {
        1.0
    } else {
        10f64.powf(-(dz - 0.5))
    }
}

/// Equal-loudness pre-emphasis at angular frequency `omega` (rad/s).
pub fn equal_loudness(omega: f64) -> f64 {
    let w2 = omega * omega;
    (w2 + 56.8e6) * w2 * w2 / ((w2 + 6.3e6).powi(2) * (w2 + 0.38e9))
}

/// Eight PLP cepstra (gain term excluded) from a Bark-warped, loudness-compressed
/// all-pole model of order 8.
pub fn plp8(block: &[f64], sample_rate: u32) -> [f64; PLP_ORDER] {
    let n_fft = fft_size(block.len());
    let power = dsp::power_spectrum(block, n_fft);
    let bin_hz = sample_rate as f64 / n_fft as f64;
    let bark_max = hz_to_bark(sample_rate as f64 / 2.0);
    let bin_bark: Vec<f64> = (0..power.len()).map(|k| hz_to_bark(k as f64 * bin_hz)).collect();
    let step = bark_max / (BARK_FILTERS - 1) as f64;

    let mut auditory: Vec<f64> = (0..BARK_FILTERS)
        .map(|j| {
            let centre = j as f64 * step;
            let band: f64 = power
                .iter()
                .zip(&bin_bark)
                .map(|(p, z)| p * bark_band_weight(z - centre))
                .sum();
            let centre_hz = 600.0 * (centre / 6.0).sinh();
            (band * equal_loudness(2.0 * PI * centre_hz)).cbrt()
        })
        .collect();
    // The end bands sit where the loudness curve vanishes; copy their neighbours.
    auditory[0] = auditory[1];
    auditory[BARK_FILTERS - 1] = auditory[BARK_FILTERS - 2];

    // Treat the bands as one half of a symmetric spectrum and invert it.
    let m = BARK_FILTERS - 1;
    let r: Vec<f64> = (0..=PLP_ORDER)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let inner: f64 = (1..m)
                .map(|j| 2.0 * auditory[j] * (PI * (k * j) as f64 / m as f64).cos())
                .sum();
            (auditory[0] + sign * auditory[m] + inner) / (2 * m) as f64
        })
        .collect();
    match levinson_durbin(&r, PLP_ORDER) {
        Some(lpc) => {
            let c = lpc_to_cepstrum(&lpc.coeffs, PLP_ORDER);
            std::array::from_fn(|i| c[i])
        }
        None => [0.0; PLP_ORDER],
    }
}

/// All per-frame audio descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioFrameFeatures {
    pub pitch_hz: f64,
    pub energy_rms: f64,
    pub zcr: f64,
    pub mfcc: [f64; MFCC_COUNT],
    pub formants: [f64; FORMANT_COUNT],
    pub plp: [f64; PLP_ORDER],
}

impl AudioFrameFeatures {
    pub const DIM: usize = 3 + MFCC_COUNT + FORMANT_COUNT + PLP_ORDER;

    pub fn names() -> Vec<String> {
        let mut names = vec!["pitch".to_string(), "energy".to_string(), "zcr".to_string()];
        names.extend((1..=MFCC_COUNT).map(|i| format!("mfcc{i}")));
        names.extend((1..=FORMANT_COUNT).map(|i| format!("formant{i}")));
        names.extend((1..=PLP_ORDER).map(|i| format!("plp{i}")));
        names
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::DIM);
        v.extend([self.pitch_hz, self.energy_rms, self.zcr]);
        v.extend_from_slice(&self.mfcc);
        v.extend_from_slice(&self.formants);
        v.extend_from_slice(&self.plp);
        v
    }
}

/// Run every descriptor over every frame of `track`. Frame `i` starts at `i * hop` seconds.
pub fn extract_audio_frames(
    track: &AudioTrack,
    plan: &WindowPlan,
) -> Result<Vec<AudioFrameFeatures>, AudioFeatureError> {
    plan.validate()?;
    let sr = track.sample_rate;
    let (len, hop) = plan.samples(sr);
    let n = track.samples.len();
    let count = frame_count(n, len, hop);
    if count == 0 {
        return Err(AudioFeatureError::TooShort { samples: n, window: len });
    }
    let window = hann(len);
    let pitch_len = pitch_block_len(sr).max(len).min(n);

    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let start = i * hop;
            let raw = &track.samples[start..start + len];
            let windowed: Vec<f64> = raw.iter().zip(&window).map(|(s, w)| s * w).collect();
            let pitch_start = start.min(n - pitch_len);
            AudioFrameFeatures {
                pitch_hz: pitch(&track.samples[pitch_start..pitch_start + pitch_len], sr),
                energy_rms: energy(raw),
                zcr: zero_crossing_rate(raw),
                mfcc: mfcc12(&windowed, sr),
                formants: formants(&windowed, sr),
                plp: plp8(&windowed, sr),
            }
        })
        .collect())
}
