use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{ExtractionConfig, HarnessError};
use crate::audio_features::extract_audio_frames;
use crate::ingest::{parse_wav, parse_y4m, ClipRecord};
use crate::temporal_stats::{clip_stats, pool_windows, ClipFeatureVector, FrameFeatureSequence, RateInfo};
use crate::visual_features::extract_visual_frames;

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "AVDIM_CACHE_DIR";

/// Window sequence and clip-level statistics for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeatures {
    pub sequence: FrameFeatureSequence,
    pub vector: ClipFeatureVector,
}

/// Per-clip window CSVs keyed by a digest of the media bytes and the extraction
/// settings. A missing directory disables caching.
#[derive(Debug, Clone, Default)]
pub struct FeatureCache {
    dir: Option<PathBuf>,
}

impl FeatureCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        FeatureCache { dir }
    }

    pub fn disabled() -> Self {
        FeatureCache { dir: None }
    }

    /// Explicit directory first, then `AVDIM_CACHE_DIR`, else no cache.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        let dir = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        FeatureCache { dir }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(audio: &[u8], video: &[u8], extraction: &ExtractionConfig) -> String {
        let mut h = Sha256::new();
        for part in [audio, video, &serde_json::to_vec(extraction).expect("config serializes")] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        hex::encode(h.finalize())
    }

    fn path_for(&self, clip_id: &str, key: &str) -> Option<PathBuf> {
        let safe: String = clip_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        self.dir.as_ref().map(|d| d.join(format!("{safe}.{key}.windows.csv")))
    }

    fn load(&self, clip_id: &str, key: &str) -> Option<FrameFeatureSequence> {
        let path = self.path_for(clip_id, key)?;
        let mut reader = csv::Reader::from_path(&path).ok()?;
        let feature_names: Vec<String> = reader.headers().ok()?.iter().map(str::to_string).collect();
        let mut windows = Vec::new();
        for record in reader.records() {
            let row: Vec<f64> = record.ok()?.iter().map(|v| v.parse().ok()).collect::<Option<_>>()?;
            if row.len() != feature_names.len() {
                return None;
            }
            windows.push(row);
        }
        if windows.is_empty() {
            return None;
        }
        Some(FrameFeatureSequence {
            clip_id: clip_id.to_string(),
            feature_names,
            windows,
        })
    }

    fn store(&self, key: &str, seq: &FrameFeatureSequence) -> Result<(), HarnessError> {
        let Some(path) = self.path_for(&seq.clip_id, key) else {
            return Ok(());
        };
        let dir = self.dir.as_ref().expect("path implies dir");
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mut writer = csv::Writer::from_path(&path).map_err(|e| HarnessError::Data(e.to_string()))?;
        let mut write = |fields: Vec<String>| writer.write_record(&fields).map_err(|e| HarnessError::Data(e.to_string()));
        write(seq.feature_names.clone())?;
        for row in &seq.windows {
            // Display for f64 is the shortest string that parses back to the same bits.
            write(row.iter().map(f64::to_string).collect())?;
        }
        writer.flush().map_err(|e| HarnessError::io(&path, e))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, HarnessError> {
    fs::read(path).map_err(|e| HarnessError::io(path, e))
}

fn extract_uncached(
    record: &ClipRecord,
    audio_bytes: &[u8],
    video_bytes: &[u8],
    extraction: &ExtractionConfig,
) -> Result<FrameFeatureSequence, HarnessError> {
    let track = parse_wav(audio_bytes)?;
    let video = parse_y4m(video_bytes)?;
    let audio = extract_audio_frames(&track, &extraction.window_plan)?;
    let (visual, shots) = extract_visual_frames(&video, &extraction.cuts)?;
    let (_, hop) = extraction.window_plan.samples(track.sample_rate);
    let rate = RateInfo {
        audio_hop: hop as f64 / track.sample_rate as f64,
        video_fps: video.frame_rate,
        duration: track.duration().min(video.duration()),
    };
    Ok(pool_windows(&record.clip_id, &audio, &visual, &shots, &rate, &extraction.pooling)?)
}

/// Features for one clip, from the cache when the media and settings match.
pub fn extract_clip(
    record: &ClipRecord,
    extraction: &ExtractionConfig,
    cache: &FeatureCache,
) -> Result<ClipFeatures, HarnessError> {
    let wrap = |e: HarnessError| HarnessError::Clip {
        clip_id: record.clip_id.clone(),
        reason: e.to_string(),
    };
    let audio_bytes = read(&record.audio_path).map_err(wrap)?;
    let video_bytes = read(&record.video_path).map_err(wrap)?;
    let key = FeatureCache::key(&audio_bytes, &video_bytes, extraction);
    let sequence = match cache.load(&record.clip_id, &key) {
        Some(seq) => seq,
        None => {
            let seq = extract_uncached(record, &audio_bytes, &video_bytes, extraction).map_err(wrap)?;
            cache.store(&key, &seq)?;
            seq
        }
    };
    let vector = clip_stats(&sequence).map_err(|e| wrap(e.into()))?;
    Ok(ClipFeatures { sequence, vector })
}

/// Extract every clip in parallel. Results keep manifest order, and the first
/// failing clip in that order is the one reported.
pub fn extract_clips(
    records: &[ClipRecord],
    extraction: &ExtractionConfig,
    cache: &FeatureCache,
) -> Result<Vec<ClipFeatures>, HarnessError> {
    let results: Vec<Result<ClipFeatures, HarnessError>> =
        records.par_iter().map(|r| extract_clip(r, extraction, cache)).collect();
    results.into_iter().collect()
}
