use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, ModelError, TrainConfig};
use crate::corpus::stratified_folds;
use crate::eval::{metrics_from_confusion, roc_auc_ovr, ConfusionMatrix};
use crate::features::{smote, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MacroF1,
    RocAucOvr,
}

impl std::str::FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "macro_f1" => Ok(Objective::MacroF1),
            "roc_auc_ovr" | "roc_auc" => Ok(Objective::RocAucOvr),
            other => Err(format!("unknown objective `{other}` (macro_f1, roc_auc_ovr)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub wall_seconds: f64,
    pub max_trials: usize,
    pub objective: Objective,
    pub cv_folds: usize,
    pub seed: u64,
    /// SMOTE neighbour count applied to each fold's training part.
    pub smote_k: Option<usize>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            wall_seconds: 1000.0,
            max_trials: 50,
            objective: Objective::MacroF1,
            cv_folds: 10,
            seed: 0,
            smote_k: Some(5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config: TrainConfig,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best_config: TrainConfig,
    pub best_score: f64,
    pub trials: Vec<TrialRecord>,
}

/// Draws one configuration: rounds 50..=500, learning rate log-uniform in
/// [0.01, 0.3], leaves 4..=128, min leaf 1..=50, l2 in [0, 10], column
/// subsample in [0.5, 1].
pub fn sample_config(rng: &mut ChaCha8Rng, seed: u64) -> TrainConfig {
    let (lo, hi) = (0.01f64.ln(), 0.3f64.ln());
    TrainConfig {
        num_rounds: rng.random_range(50..=500),
        learning_rate: rng.random_range(lo..=hi).exp(),
        max_leaves: rng.random_range(4..=128),
        min_samples_leaf: rng.random_range(1..=50),
        l2_leaf_penalty: rng.random_range(0.0..=10.0),
        feature_subsample: rng.random_range(0.5..=1.0),
        seed,
        histogram_bins: None,
    }
}

/// Cross-validated objective of one configuration, or `None` when the
/// deadline passed before every fold finished.
fn cv_score(
    matrix: &FeatureMatrix,
    folds: &[usize],
    n_folds: usize,
    config: &TrainConfig,
    budget: &SearchBudget,
    deadline: Instant,
) -> Result<Option<f64>, ModelError> {
    let labels = matrix.require_labels()?;
    let results: Vec<Result<Option<(Vec<usize>, Vec<Vec<f64>>, Vec<crate::corpus::DomainLabel>)>, ModelError>> = (0..n_folds)
        .into_par_iter()
        .map(|f| {
            if Instant::now() >= deadline {
                return Ok(None);
            }
            let train_idx: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != f).collect();
            let test_idx: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == f).collect();
            let mut train_m = matrix.select_rows(&train_idx);
            if let Some(k) = budget.smote_k {
                train_m = smote(&train_m, k, budget.seed.wrapping_add(f as u64))?;
            }
            let model = match train(&train_m, config) {
                Ok(m) => m,
                Err(ModelError::DegenerateLabels) => return Ok(None),
                Err(e) => return Err(e),
            };
            let test_m = matrix.select_rows(&test_idx);
            let proba = model.predict_proba(&test_m)?;
            Ok(Some((test_idx, proba, model.classes.clone())))
        })
        .collect();
    if Instant::now() > deadline {
        return Ok(None);
    }
    let mut classes: Vec<_> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut truth = Vec::new();
    let mut scores: Vec<Vec<f64>> = Vec::new();
    for r in results {
        let Some((idx, proba, model_classes)) = r? else {
            return Ok(None);
        };
        for (i, p) in idx.iter().zip(proba) {
            truth.push(labels[*i]);
            // expand to the full class list; classes absent from a fold's
            // training part get probability zero
            scores.push(
                classes
                    .iter()
                    .map(|c| model_classes.iter().position(|m| m == c).map_or(0.0, |j| p[j]))
                    .collect(),
            );
        }
    }
    let score = match budget.objective {
        Objective::MacroF1 => {
            let pred: Vec<_> = scores.iter().map(|p| classes[super::argmax(p)]).collect();
            let cm = ConfusionMatrix::from_predictions(&classes, &truth, &pred);
            metrics_from_confusion(&cm).map(|m| m.macro_f1).unwrap_or(0.0)
        }
        Objective::RocAucOvr => roc_auc_ovr(&truth, &classes, &scores)
            .ok()
            .and_then(|r| r.macro_auc)
            .unwrap_or(0.0),
    };
    Ok(Some(score))
}

/// Random search over training configurations. Stops at `max_trials` or
/// once the wall-clock budget is spent; a trial still running at the
/// deadline is discarded. Ties keep the earlier trial.
pub fn search(matrix: &FeatureMatrix, budget: &SearchBudget) -> Result<SearchOutcome, ModelError> {
    if budget.max_trials == 0 || budget.cv_folds < 2 || budget.wall_seconds.is_nan() || budget.wall_seconds <= 0.0 {
        return Err(ModelError::InvalidConfig(
            "search budget needs max_trials >= 1, cv_folds >= 2 and positive wall_seconds".into(),
        ));
    }
    let labels = matrix.require_labels()?;
    let smallest = {
        let mut counts = std::collections::BTreeMap::new();
        for l in labels {
            *counts.entry(*l).or_insert(0usize) += 1;
        }
        if counts.len() < 2 {
            return Err(ModelError::DegenerateLabels);
        }
        *counts.values().min().expect("nonempty")
    };
    let n_folds = budget.cv_folds.min(smallest).max(2);
    if n_folds < budget.cv_folds {
        log::warn!("reducing search folds from {} to {n_folds}: smallest class has {smallest} members", budget.cv_folds);
    }
    let folds = stratified_folds(labels, n_folds, budget.seed);
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(budget.wall_seconds);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut trials: Vec<TrialRecord> = Vec::new();
    let mut best: Option<usize> = None;
    for t in 0..budget.max_trials {
        if Instant::now() >= deadline {
            break;
        }
        let config = sample_config(&mut rng, budget.seed.wrapping_add(t as u64));
        let Some(score) = cv_score(matrix, &folds, n_folds, &config, budget, deadline)? else {
            break;
        };
        log::info!("trial {t}: score {score:.4}");
        trials.push(TrialRecord { config, score });
        if best.is_none_or(|b| score > trials[b].score) {
            best = Some(trials.len() - 1);
        }
    }
    let b = best.ok_or(ModelError::BudgetTooSmall)?;
    Ok(SearchOutcome {
        best_config: trials[b].config.clone(),
        best_score: trials[b].score,
        trials,
    })
}
