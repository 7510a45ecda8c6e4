//! Experiment orchestration: feature extraction with an on-disk cache, four-fold
//! cross-validation over the audio, visual and fused feature groups, and report
//! emission.

mod cache;
mod config;
mod experiment;
mod report;
mod synth;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use cache::{extract_clip, extract_clips, ClipFeatures, FeatureCache, CACHE_ENV};
pub use config::{
    derive_seed, ExperimentConfig, ExtractionConfig, FeatureGroup, LstmSettings, SvrSettings, FOLDS,
};
pub use experiment::{
    experiment_folds, fold_data, labels_of, run_experiment, run_experiment_on, FoldData, FoldModels,
};
pub use report::{
    ConditionResult, EvaluationReport, ModelKind, PredictionRecord, Selections, TableRow, TableSummary, Timestamps,
    SCHEMA_VERSION,
};
pub use synth::{generate_synthetic_dataset, SyntheticDataset};

use crate::audio_features::AudioFeatureError;
use crate::cfs::CfsError;
use crate::ingest::IngestError;
use crate::lstm::LstmError;
use crate::metrics::MetricError;
use crate::svr::SvrError;
use crate::temporal_stats::TemporalError;
use crate::visual_features::VisualFeatureError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("clip {clip_id}: {reason}")]
    Clip { clip_id: String, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Audio(#[from] AudioFeatureError),
    #[error(transparent)]
    Visual(#[from] VisualFeatureError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Cfs(#[from] CfsError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Svr(#[from] SvrError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed data: {0}")]
    Data(String),
}

impl HarnessError {
    /// Process exit code: 1 usage/config, 2 data, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Lstm(LstmError::TrainingDiverged { .. }) | HarnessError::Svr(SvrError::ConvergenceError { .. }) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Seeded shuffle, then split into `FOLDS` contiguous parts whose sizes differ by at most one.
pub fn make_folds(clip_ids: &[String], seed: u64) -> Vec<Vec<String>> {
    let mut ids = clip_ids.to_vec();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = ids.len() / FOLDS;
    let extra = ids.len() % FOLDS;
    let mut folds = Vec::with_capacity(FOLDS);
    let mut rest = ids.as_slice();
    for f in 0..FOLDS {
        let (head, tail) = rest.split_at(base + usize::from(f < extra));
        folds.push(head.to_vec());
        rest = tail;
    }
    folds
}
