use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::audio_features::WindowPlan;
use crate::lstm::TrainConfig;
use crate::temporal_stats::{PoolingGrid, AUDIO_PREFIX, VISUAL_PREFIX};
use crate::visual_features::CutParams;

pub const FOLDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Fused,
    Audio,
    Visual,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Fused, FeatureGroup::Audio, FeatureGroup::Visual];

    pub fn admits(self, feature_name: &str) -> bool {
        match self {
            FeatureGroup::Fused => true,
            FeatureGroup::Audio => feature_name.starts_with(AUDIO_PREFIX),
            FeatureGroup::Visual => feature_name.starts_with(VISUAL_PREFIX),
        }
    }

    /// Row label used in the printed tables.
    /// Stable seed-derivation tag, independent of the configured group order.
    pub fn seed_tag(self) -> u64 {
        match self {
            FeatureGroup::Fused => 0,
            FeatureGroup::Audio => 1,
            FeatureGroup::Visual => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureGroup::Fused => "Audio & Visual",
            FeatureGroup::Audio => "Audio",
            FeatureGroup::Visual => "Visual",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureGroup::Fused => "fused",
            FeatureGroup::Audio => "audio",
            FeatureGroup::Visual => "visual",
        })
    }
}

/// Everything that changes extracted features. Hashed into cache keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExtractionConfig {
    pub window_plan: WindowPlan,
    pub pooling: PoolingGrid,
    pub cuts: CutParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmSettings {
    #[serde(flatten)]
    pub train: TrainConfig,
    /// Share of each training fold held out for early stopping (0 disables it).
    pub validation_fraction: f64,
}

impl Default for LstmSettings {
    fn default() -> Self {
        LstmSettings {
            train: TrainConfig {
                patience: Some(20),
                ..TrainConfig::default()
            },
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrSettings {
    pub c_grid: Vec<f64>,
    pub epsilon: f64,
    /// Kernel width; `None` means `1 / feature count`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrSettings {
    fn default() -> Self {
        SvrSettings {
            c_grid: vec![1.0, 10.0, 100.0],
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub manifest_path: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub folds: usize,
    pub feature_groups: Vec<FeatureGroup>,
    pub selection_cap: usize,
    pub lstm: LstmSettings,
    pub svr: SvrSettings,
    pub extraction: ExtractionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifest_path: PathBuf::from("manifest.csv"),
            cache_dir: None,
            seed: 0,
            folds: FOLDS,
            feature_groups: FeatureGroup::ALL.to_vec(),
            selection_cap: crate::cfs::DEFAULT_CAP,
            lstm: LstmSettings::default(),
            svr: SvrSettings::default(),
            extraction: ExtractionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.folds != FOLDS {
            return bad(format!("folds must be {FOLDS}, got {}", self.folds));
        }
        if self.feature_groups.is_empty() {
            return bad("feature_groups is empty".into());
        }
        if (1..self.feature_groups.len()).any(|i| self.feature_groups[..i].contains(&self.feature_groups[i])) {
            return bad("feature_groups lists a group twice".into());
        }
        if self.selection_cap == 0 {
            return bad("selection_cap must be positive".into());
        }
        if !(0.0..1.0).contains(&self.lstm.validation_fraction) {
            return bad("lstm.validation_fraction must be in [0, 1)".into());
        }
        if self.svr.c_grid.is_empty() || self.svr.c_grid.iter().any(|c| !(*c > 0.0)) {
            return bad("svr.c_grid must hold positive values".into());
        }
        self.lstm.train.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.extraction
            .window_plan
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Deterministic sub-seed for a named stage.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    // splitmix64 finalizer over the tag stream.
    let mut x = base;
    for &t in tags {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}
