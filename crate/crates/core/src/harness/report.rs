use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, FeatureGroup, HarnessError};
use crate::cfs::SelectionRecord;
use crate::metrics::MetricSet;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    Svr,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Svr => "svr",
        })
    }
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lstm => "LSTM",
            ModelKind::Svr => "SVM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub clip_id: String,
    pub fold: usize,
    pub true_arousal: f64,
    pub true_valence: f64,
    pub pred_arousal: f64,
    pub pred_valence: f64,
}

/// Pooled out-of-fold results for one feature group and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub group: FeatureGroup,
    pub model: ModelKind,
    pub arousal: MetricSet,
    pub valence: MetricSet,
    pub predictions: Vec<PredictionRecord>,
    /// SVR only: chosen `[C_arousal, C_valence]` per fold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_c: Option<Vec<[f64; 2]>>,
    /// LSTM only: epoch whose weights were kept, per fold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_epoch: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selections {
    pub group: FeatureGroup,
    pub folds: Vec<SelectionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Timestamps {
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Test clip ids of each fold.
    pub folds: Vec<Vec<String>>,
    pub conditions: Vec<ConditionResult>,
    pub selections: Vec<Selections>,
    pub timestamps: Timestamps,
}

/// One printed row: four metrics for each dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub arousal: MetricSet,
    pub valence: MetricSet,
}

/// LSTM results per feature group, and LSTM against SVM on the fused group.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSummary {
    pub by_group: Vec<TableRow>,
    pub comparison: Vec<TableRow>,
}

impl EvaluationReport {
    pub fn condition(&self, group: FeatureGroup, model: ModelKind) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.group == group && c.model == model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let report: EvaluationReport = serde_json::from_str(text).map_err(|e| HarnessError::Data(e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Data(format!(
                "unsupported report schema_version {}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// JSON with the timestamps zeroed, for comparing runs.
    pub fn to_json_without_timestamps(&self) -> String {
        EvaluationReport {
            timestamps: Timestamps::default(),
            ..self.clone()
        }
        .to_json()
    }

    /// One row per condition and clip.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "group",
            "model",
            "clip_id",
            "fold",
            "true_arousal",
            "true_valence",
            "pred_arousal",
            "pred_valence",
        ];
        w.write_record(header).expect("in-memory write");
        for c in &self.conditions {
            for p in &c.predictions {
                w.write_record([
                    c.group.to_string(),
                    c.model.to_string(),
                    p.clip_id.clone(),
                    p.fold.to_string(),
                    p.true_arousal.to_string(),
                    p.true_valence.to_string(),
                    p.pred_arousal.to_string(),
                    p.pred_valence.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn table_summary(&self) -> TableSummary {
        let row = |label: &str, c: &ConditionResult| TableRow {
            label: label.to_string(),
            arousal: c.arousal,
            valence: c.valence,
        };
        let by_group = FeatureGroup::ALL
            .iter()
            .filter_map(|&g| self.condition(g, ModelKind::Lstm).map(|c| row(g.label(), c)))
            .collect();
        let comparison = [ModelKind::Lstm, ModelKind::Svr]
            .iter()
            .filter_map(|&m| self.condition(FeatureGroup::Fused, m).map(|c| row(m.label(), c)))
            .collect();
        TableSummary { by_group, comparison }
    }

    /// Plain-text rendering of both tables.
    pub fn render_tables(&self) -> String {
        let summary = self.table_summary();
        let mut out = String::new();
        render(&mut out, "Prediction results (LSTM)", "Features", &summary.by_group);
        out.push('\n');
        render(&mut out, "Comparison on fused features", "Model", &summary.comparison);
        out
    }
}

fn render(out: &mut String, title: &str, first: &str, rows: &[TableRow]) {
    let metrics = ["R2", "CC", "MLE", "BD"];
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{:<16}| {:^35} | {:^35}", "", "Arousal", "Valence");
    let heads: String = metrics.iter().map(|m| format!("{m:>8}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{first:<16}| {heads} | {heads}");
    for r in rows {
        let cells = |m: &MetricSet| {
            [m.r2, m.cc, m.mle, m.bd]
                .iter()
                .map(|v| format!("{v:>8.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "{:<16}| {} | {}", r.label, cells(&r.arousal), cells(&r.valence));
    }
}
