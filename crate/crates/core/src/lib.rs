//! Arousal/valence regression for audio-visual clips.
//!
//! The pipeline runs raw WAV/Y4M media through short-time audio and visual
//! descriptors, pools them onto a one-second window grid, selects a compact
//! feature subset with correlation-based feature selection, and regresses
//! both affective dimensions jointly with a two-output LSTM. A per-dimension
//! epsilon-SVR serves as the baseline, and the harness runs the four-fold
//! evaluation over audio, visual and fused feature groups.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audio_features;
pub mod dsp;
pub mod harness;
pub mod ingest;
pub mod cfs;
pub mod lstm;
pub mod metrics;
pub mod svr;
pub mod temporal_stats;
pub mod visual_features;
