//! Synthetic clips whose audio and visual statistics are driven by two latent
//! affect variables with sample correlation exactly 0.5.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::HarnessError;
use crate::ingest::{LABEL_MAX, LABEL_MIN, load_manifest, manifest_to_string, write_wav, write_y4m, Chroma, ClipRecord, Frame, FrameSequence};

const SAMPLE_RATE: u32 = 8000;
const FPS: u32 = 10;
const WIDTH: usize = 32;
const HEIGHT: usize = 32;
const RATERS: usize = 3;
const RATER_NOISE: f64 = 0.3;
pub const PLANTED_CORRELATION: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub manifest_path: PathBuf,
    /// Records as loaded back from the manifest (absolute media paths).
    pub records: Vec<ClipRecord>,
    pub latent_arousal: Vec<f64>,
    pub latent_valence: Vec<f64>,
}

fn standardized(v: &mut [f64]) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
    v.iter_mut().for_each(|x| *x = (*x - m) / s);
}

/// Two unit-variance latents whose sample correlation is exactly `rho`.
fn correlated_latents(n: usize, rho: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mut b: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    standardized(&mut a);
    standardized(&mut b);
    let proj = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    b.iter_mut().zip(&a).for_each(|(y, x)| *y -= proj * x);
    standardized(&mut b);
    let v = a.iter().zip(&b).map(|(x, y)| rho * x + (1.0 - rho * rho).sqrt() * y).collect();
    (a, v)
}

/// Average of several noisy annotator scores, each clamped to the label range.
fn rate(latent: f64, rng: &mut ChaCha8Rng) -> f64 {
    let noise = Normal::new(0.0, RATER_NOISE).expect("valid sigma");
    (0..RATERS)
        .map(|_| (latent + noise.sample(rng)).clamp(LABEL_MIN, LABEL_MAX))
        .sum::<f64>()
        / RATERS as f64
}

fn audio_clip(a: f64, v: f64, seconds: f64, rng: &mut ChaCha8Rng) -> Vec<i16> {
    let sr = SAMPLE_RATE as f64;
    let n = (seconds * sr).round() as usize;
    let f0 = 150.0 * 2f64.powf(0.5 * v + 0.1 * rng.random_range(-1.0..1.0));
    let amp = (0.2 * 2f64.powf(0.4 * a)).min(0.6);
    let noise_share = (0.25 + 0.12 * a).clamp(0.02, 0.6);
    let pulse = 2.0 + 0.5 * (a + 2.0);
    let phase = rng.random_range(0.0..2.0 * PI);
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let tone = ((2.0 * PI * f0 * t).sin() + 0.5 * (4.0 * PI * f0 * t).sin()) / 1.5;
            let hiss: f64 = rng.random_range(-1.0..1.0);
            let env = 0.7 + 0.3 * (2.0 * PI * pulse * t + phase).sin();
            let s = amp * env * ((1.0 - noise_share) * tone + noise_share * hiss);
            (s.clamp(-1.0, 1.0) * 32767.0).round() as i16
        })
        .collect()
}

fn cut_points(frames: usize, a: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let wanted = (0.6 * (a + 2.0) + rng.random_range(0.0..1.0)).floor().max(0.0) as usize;
    let gap = 6;
    let mut cuts = Vec::new();
    let mut next = gap;
    for k in 0..wanted {
        let remaining = wanted - k;
        let latest = frames.saturating_sub(remaining * gap);
        if next > latest {
            break;
        }
        let at = rng.random_range(next..=latest.min(next + 10));
        cuts.push(at);
        next = at + gap;
    }
    cuts
}

fn video_clip(a: f64, v: f64, seconds: f64, rng: &mut ChaCha8Rng) -> FrameSequence {
    let n = (seconds * FPS as f64).round() as usize;
    let base = 120.0 + 25.0 * v + rng.random_range(-8.0..8.0);
    let sat = (22.0 + 10.0 * v).clamp(3.0, 60.0);
    let hue = rng.random_range(0.0..2.0 * PI);
    let cb = (128.0 + sat * hue.cos()).round() as u8;
    let cr = (128.0 + sat * hue.sin()).round() as u8;
    let grain = (5.0 + 3.0 * a).clamp(0.5, 14.0);
    let speed = 1.0 + 0.8 * (a + 2.0);
    let cuts = cut_points(n, a, rng);

    let frames = (0..n)
        .map(|t| {
            let shot = cuts.iter().filter(|&&c| c <= t).count();
            let offset = if shot % 2 == 0 { -35.0 } else { 35.0 };
            let stripe = 4 + 2 * (shot % 3);
            let x0 = (t as f64 * speed) as usize;
            let mut frame = Frame::uniform(WIDTH, HEIGHT, 0, cb, cr);
            for y in 0..HEIGHT {
                for x in 0..WIDTH {
                    let pattern = if ((x + x0) / stripe).is_multiple_of(2) { 12.0 } else { -12.0 };
                    let g: f64 = rng.random_range(-grain..grain);
                    frame.y[y * WIDTH + x] = (base + offset + pattern + g).round().clamp(16.0, 235.0) as u8;
                }
            }
            frame
        })
        .collect();
    FrameSequence {
        frames,
        width: WIDTH,
        height: HEIGHT,
        frame_rate: FPS as f64,
    }
}

/// Write `n_clips` WAV/Y4M pairs and `manifest.csv` into `dir`.
pub fn generate_synthetic_dataset(seed: u64, n_clips: usize, dir: &Path) -> Result<SyntheticDataset, HarnessError> {
    if n_clips < 2 {
        return Err(HarnessError::Config("need at least 2 clips".into()));
    }
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (latent_arousal, latent_valence) = correlated_latents(n_clips, PLANTED_CORRELATION, &mut rng);

    let mut rows = Vec::with_capacity(n_clips);
    for i in 0..n_clips {
        let (a, v) = (latent_arousal[i], latent_valence[i]);
        let seconds = 3.0 + (rng.random_range(0..=20) as f64) / 10.0;
        let clip_id = format!("clip_{i:03}");
        let wav = format!("{clip_id}.wav");
        let y4m = format!("{clip_id}.y4m");
        let pcm = audio_clip(a, v, seconds, &mut rng);
        let video = video_clip(a, v, seconds, &mut rng);
        let write = |name: &str, bytes: Vec<u8>| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| HarnessError::io(path, e))
        };
        write(&wav, write_wav(&pcm, SAMPLE_RATE, 1))?;
        write(&y4m, write_y4m(&video, Chroma::C420, FPS, 1))?;
        rows.push(ClipRecord {
            clip_id,
            audio_path: PathBuf::from(wav),
            video_path: PathBuf::from(y4m),
            arousal_label: rate(a, &mut rng),
            valence_label: rate(v, &mut rng),
        });
    }
    let manifest_path = dir.join("manifest.csv");
    fs::write(&manifest_path, manifest_to_string(&rows)).map_err(|e| HarnessError::io(&manifest_path, e))?;
    let records = load_manifest(&manifest_path)?;
    Ok(SyntheticDataset {
        manifest_path,
        records,
        latent_arousal,
        latent_valence,
    })
}
