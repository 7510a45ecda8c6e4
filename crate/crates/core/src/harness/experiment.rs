use std::collections::HashSet;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{ConditionResult, EvaluationReport, ModelKind, PredictionRecord, Selections, Timestamps, SCHEMA_VERSION};
use super::{derive_seed, extract_clips, make_folds, ClipFeatures, ExperimentConfig, FeatureCache, FeatureGroup, HarnessError};
use crate::cfs::{correlation_tables, greedy_forward_select, SelectedFeatureSet, SelectionRecord};
use crate::ingest::{load_manifest, ClipRecord};
use crate::lstm::{predict, train, PredictionPair, Sample, TrainOutcome};
use crate::metrics::{bhattacharyya_distance, mean_linear_error, pearson_cc, r_squared, MetricError, MetricSet};
use crate::svr::{train_svr_with_grid, SvrFit, SvrParams};
use crate::temporal_stats::{base_feature_name, standardize, Standardizer};

// Stage tags for derived seeds.
const TAG_FOLDS: u64 = 0;
const TAG_VALIDATION: u64 = 1;
const TAG_LSTM: u64 = 2;
const TAG_SVR: u64 = 3;

/// Inputs for one group and one train/test split, with all statistics fitted on
/// the training clips only.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Indices refer to the full clip-statistic vector.
    pub selection: SelectedFeatureSet,
    /// Window feature columns feeding the LSTM, in first-selected order.
    pub window_columns: Vec<usize>,
    pub window_scaler: Standardizer,
    pub svr_train: Vec<Vec<f64>>,
    pub svr_test: Vec<Vec<f64>>,
    pub lstm_train: Vec<Sample>,
    pub lstm_test: Vec<Vec<Vec<f64>>>,
}

pub fn fold_data(
    clips: &[ClipFeatures],
    labels: &[PredictionPair],
    train_idx: &[usize],
    test_idx: &[usize],
    group: FeatureGroup,
    cap: usize,
) -> Result<FoldData, HarnessError> {
    let first = clips.first().ok_or_else(|| HarnessError::Data("no clips".into()))?;
    let stat_names = &first.vector.names;
    let columns: Vec<usize> = (0..stat_names.len()).filter(|&c| group.admits(&stat_names[c])).collect();
    if columns.is_empty() {
        return Err(HarnessError::Data(format!("no features in group {group}")));
    }
    let masked = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter()
            .map(|&i| columns.iter().map(|&c| clips[i].vector.values[c]).collect())
            .collect()
    };
    let (z_train, z_test, _) = standardize(&masked(train_idx), &masked(test_idx))?;

    let ya: Vec<f64> = train_idx.iter().map(|&i| labels[i].arousal).collect();
    let yv: Vec<f64> = train_idx.iter().map(|&i| labels[i].valence).collect();
    let tables = correlation_tables(&z_train, &ya, &yv)?;
    let masked_names: Vec<String> = columns.iter().map(|&c| stat_names[c].clone()).collect();
    let local = greedy_forward_select(&tables, &masked_names, cap);
    let pick = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter().map(|r| local.indices.iter().map(|&j| r[j]).collect()).collect()
    };
    let svr_train = pick(&z_train);
    let svr_test = pick(&z_test);
    let selection = SelectedFeatureSet {
        indices: local.indices.iter().map(|&j| columns[j]).collect(),
        ..local
    };

    let window_names = &first.sequence.feature_names;
    let mut seen = HashSet::new();
    let mut window_columns = Vec::new();
    for name in &selection.names {
        let base = base_feature_name(name);
        if seen.insert(base) {
            let col = window_names
                .iter()
                .position(|w| w == base)
                .ok_or_else(|| HarnessError::Data(format!("no window feature for {name}")))?;
            window_columns.push(col);
        }
    }
    let slice = |i: usize| -> Vec<Vec<f64>> {
        clips[i]
            .sequence
            .windows
            .iter()
            .map(|row| window_columns.iter().map(|&c| row[c]).collect())
            .collect()
    };
    let train_windows: Vec<Vec<Vec<f64>>> = train_idx.iter().map(|&i| slice(i)).collect();
    let window_scaler = Standardizer::fit(train_windows.iter().flatten().map(Vec::as_slice))?;
    let scale = |seq: Vec<Vec<f64>>| -> Vec<Vec<f64>> { seq.iter().map(|r| window_scaler.transform(r)).collect() };
    let lstm_train = train_windows
        .into_iter()
        .zip(train_idx)
        .map(|(seq, &i)| (scale(seq), labels[i]))
        .collect();
    let lstm_test = test_idx.iter().map(|&i| scale(slice(i))).collect();

    Ok(FoldData {
        train_idx: train_idx.to_vec(),
        test_idx: test_idx.to_vec(),
        selection,
        window_columns,
        window_scaler,
        svr_train,
        svr_test,
        lstm_train,
        lstm_test,
    })
}

/// Models fitted on one fold's training clips.
#[derive(Debug, Clone)]
pub struct FoldModels {
    pub lstm: TrainOutcome,
    pub svr_arousal: SvrFit,
    pub svr_valence: SvrFit,
    /// Chosen `C` for arousal and valence.
    pub chosen_c: [f64; 2],
}

impl FoldModels {
    pub fn fit(config: &ExperimentConfig, data: &FoldData, tags: &[u64]) -> Result<Self, HarnessError> {
        let seed = |stage: u64, extra: &[u64]| {
            let mut t = vec![stage];
            t.extend_from_slice(tags);
            t.extend_from_slice(extra);
            derive_seed(config.seed, &t)
        };

        let mut order: Vec<usize> = (0..data.lstm_train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed(TAG_VALIDATION, &[])));
        let n_val = (config.lstm.validation_fraction * order.len() as f64).round() as usize;
        let n_val = n_val.min(order.len().saturating_sub(1));
        let (val_idx, fit_idx) = order.split_at(n_val);
        let subset = |idx: &[usize]| -> Vec<Sample> { idx.iter().map(|&i| data.lstm_train[i].clone()).collect() };
        let fit_set = subset(fit_idx);
        let val_set = subset(val_idx);
        let lstm_config = crate::lstm::TrainConfig {
            seed: seed(TAG_LSTM, &[]),
            ..config.lstm.train.clone()
        };
        let lstm = train(&fit_set, (!val_set.is_empty()).then_some(val_set.as_slice()), &lstm_config)?;

        let dim = data.svr_train.first().map_or(1, Vec::len);
        let base = SvrParams {
            c: config.svr.c_grid[0],
            epsilon: config.svr.epsilon,
            gamma: config.svr.gamma.unwrap_or(1.0 / dim.max(1) as f64),
            tol: config.svr.tol,
            max_iter: config.svr.max_iter,
        };
        let target = |f: fn(&PredictionPair) -> f64| -> Vec<f64> { data.lstm_train.iter().map(|(_, l)| f(l)).collect() };
        let (svr_arousal, ca) = train_svr_with_grid(
            &data.svr_train,
            &target(|l| l.arousal),
            &base,
            &config.svr.c_grid,
            seed(TAG_SVR, &[0]),
        )?;
        let (svr_valence, cv) = train_svr_with_grid(
            &data.svr_train,
            &target(|l| l.valence),
            &base,
            &config.svr.c_grid,
            seed(TAG_SVR, &[1]),
        )?;
        Ok(FoldModels {
            lstm,
            svr_arousal,
            svr_valence,
            chosen_c: [ca, cv],
        })
    }

    /// Clamped predictions for the fold's test clips: `(lstm, svr)`.
    pub fn predict(&self, data: &FoldData) -> Result<(Vec<PredictionPair>, Vec<PredictionPair>), HarnessError> {
        let lstm = data
            .lstm_test
            .iter()
            .map(|seq| predict(&self.lstm.model, seq))
            .collect::<Result<Vec<_>, _>>()?;
        let svr = data
            .svr_test
            .iter()
            .map(|x| PredictionPair::new(self.svr_arousal.model.predict(x), self.svr_valence.model.predict(x)))
            .collect();
        Ok((lstm, svr))
    }
}

/// Metrics over pooled predictions. A constant prediction vector has no defined
/// correlation and is scored as CC = 0.
fn metrics(pred: &[f64], truth: &[f64]) -> Result<MetricSet, HarnessError> {
    let cc = match pearson_cc(pred, truth) {
        Err(MetricError::DegenerateInput) if truth.iter().any(|t| *t != truth[0]) => 0.0,
        other => other?,
    };
    Ok(MetricSet {
        r2: r_squared(pred, truth)?,
        cc,
        mle: mean_linear_error(pred, truth)?,
        bd: bhattacharyya_distance(pred, truth)?,
    })
}

/// The cross-validation split used by [`run_experiment_on`].
pub fn experiment_folds(config: &ExperimentConfig, clip_ids: &[String]) -> Vec<Vec<String>> {
    make_folds(clip_ids, derive_seed(config.seed, &[TAG_FOLDS]))
}

/// Labels of each record as a prediction pair.
pub fn labels_of(records: &[ClipRecord]) -> Vec<PredictionPair> {
    records
        .iter()
        .map(|r| PredictionPair::new(r.arousal_label, r.valence_label))
        .collect()
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Load the manifest, extract (or reuse cached) features and run the evaluation.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvaluationReport, HarnessError> {
    config.validate()?;
    let records = load_manifest(&config.manifest_path)?;
    let cache = FeatureCache::resolve(config.cache_dir.as_deref());
    let clips = extract_clips(&records, &config.extraction, &cache)?;
    run_experiment_on(config, &records, &clips)
}

/// Cross-validated evaluation over already extracted features.
pub fn run_experiment_on(
    config: &ExperimentConfig,
    records: &[ClipRecord],
    clips: &[ClipFeatures],
) -> Result<EvaluationReport, HarnessError> {
    let started = unix_now();
    config.validate()?;
    if records.len() != clips.len() {
        return Err(HarnessError::Data("record and feature counts differ".into()));
    }
    let ids: Vec<String> = records.iter().map(|r| r.clip_id.clone()).collect();
    let mut unique = HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !unique.insert(id.as_str())) {
        return Err(HarnessError::Data(format!("duplicate clip_id {dup}")));
    }
    let labels = labels_of(records);
    let folds = experiment_folds(config, &ids);
    let fold_of = |id: &str| folds.iter().position(|f| f.iter().any(|x| x == id)).expect("every clip is in a fold");
    let position = |id: &String| ids.iter().position(|x| x == id).expect("known id");

    let mut conditions = Vec::new();
    let mut selections = Vec::new();
    for &group in &config.feature_groups {
        let mut lstm_pred = vec![PredictionPair::default(); ids.len()];
        let mut svr_pred = vec![PredictionPair::default(); ids.len()];
        let mut records_for_group = Vec::new();
        let mut chosen_c = Vec::new();
        let mut chosen_epoch = Vec::new();
        for (f, test_ids) in folds.iter().enumerate() {
            let mut test_idx: Vec<usize> = test_ids.iter().map(position).collect();
            test_idx.sort_unstable();
            let train_idx: Vec<usize> = (0..ids.len()).filter(|i| !test_idx.contains(i)).collect();
            if test_idx.is_empty() {
                continue;
            }
            let data = fold_data(clips, &labels, &train_idx, &test_idx, group, config.selection_cap)?;
            let models = FoldModels::fit(config, &data, &[group.seed_tag(), f as u64])?;
            let (lstm, svr) = models.predict(&data)?;
            for (k, &i) in test_idx.iter().enumerate() {
                lstm_pred[i] = lstm[k];
                svr_pred[i] = svr[k];
            }
            records_for_group.push(SelectionRecord::new(f, &data.selection));
            chosen_c.push(models.chosen_c);
            chosen_epoch.push(models.lstm.chosen_epoch);
        }

        let truth_a: Vec<f64> = labels.iter().map(|l| l.arousal).collect();
        let truth_v: Vec<f64> = labels.iter().map(|l| l.valence).collect();
        for (model, preds) in [(ModelKind::Lstm, &lstm_pred), (ModelKind::Svr, &svr_pred)] {
            let pa: Vec<f64> = preds.iter().map(|p| p.arousal).collect();
            let pv: Vec<f64> = preds.iter().map(|p| p.valence).collect();
            let predictions = ids
                .iter()
                .enumerate()
                .map(|(i, id)| PredictionRecord {
                    clip_id: id.clone(),
                    fold: fold_of(id),
                    true_arousal: truth_a[i],
                    true_valence: truth_v[i],
                    pred_arousal: pa[i],
                    pred_valence: pv[i],
                })
                .collect();
            conditions.push(ConditionResult {
                group,
                model,
                arousal: metrics(&pa, &truth_a)?,
                valence: metrics(&pv, &truth_v)?,
                predictions,
                chosen_c: (model == ModelKind::Svr).then(|| chosen_c.clone()),
                chosen_epoch: (model == ModelKind::Lstm).then(|| chosen_epoch.clone()),
            });
        }
        selections.push(Selections {
            group,
            folds: records_for_group,
        });
    }

    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        config_hash: config.hash(),
        config: config.clone(),
        folds,
        conditions,
        selections,
        timestamps: Timestamps {
            started_unix: started,
            finished_unix: unix_now(),
        },
    })
}
