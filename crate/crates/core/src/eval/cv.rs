use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metrics_from_confusion, roc_auc_ovr, zero_r, ConfusionMatrix, EvalError, MetricsReport};
use crate::corpus::{stratified_folds, Dataset, DomainLabel, RepoRecord};
use crate::features::{EmbeddingStore, FittedPipeline, PipelineConfig, SourcePreset};
use crate::model::{search, train, GbdtModel, SearchBudget, TrainConfig};

/// Model, fitted pipeline and scores from one train/test evaluation.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub report: MetricsReport,
    pub model: GbdtModel,
    pub pipeline: FittedPipeline,
    pub predictions: Vec<DomainLabel>,
    pub probabilities: Vec<Vec<f64>>,
}

/// Metrics of a model's predictions against known labels, including
/// ROC-AUC from `probabilities` (ordered as `model_classes`).
pub fn score_predictions(
    classes: &[DomainLabel],
    truth: &[DomainLabel],
    model_classes: &[DomainLabel],
    probabilities: &[Vec<f64>],
) -> Result<MetricsReport, EvalError> {
    let predictions: Vec<DomainLabel> = probabilities
        .iter()
        .map(|p| model_classes[crate::model::argmax(p)])
        .collect();
    let cm = ConfusionMatrix::from_predictions(classes, truth, &predictions);
    let mut report = metrics_from_confusion(&cm)?;
    let expanded: Vec<Vec<f64>> = probabilities
        .iter()
        .map(|p| {
            classes
                .iter()
                .map(|c| model_classes.iter().position(|m| m == c).map_or(0.0, |j| p[j]))
                .collect()
        })
        .collect();
    let auc = roc_auc_ovr(truth, classes, &expanded)?;
    report.roc_auc_skipped = auc.skipped();
    report.roc_auc_ovr = auc.macro_auc;
    Ok(report)
}

/// Fits the pipeline and model on `train_records` only, then scores
/// `test_records`. Nothing about the test records reaches any fit.
pub fn evaluate_split(
    train_records: &[RepoRecord],
    test_records: &[RepoRecord],
    pipeline_config: &PipelineConfig,
    train_config: &TrainConfig,
    embeddings: Option<&EmbeddingStore>,
) -> Result<SplitOutcome, EvalError> {
    let (pipeline, train_m) = FittedPipeline::fit(train_records, pipeline_config, embeddings)?;
    let train_m = pipeline.oversample(train_m)?;
    let model = train(&train_m, train_config)?;
    let test_m = pipeline.transform(test_records, embeddings)?;
    let truth = test_m.require_labels()?.to_vec();
    let probabilities = model.predict_proba(&test_m)?;
    let train_labels: Vec<DomainLabel> = train_records.iter().filter_map(|r| r.label).collect();
    let mut classes: Vec<DomainLabel> = train_labels.iter().chain(&truth).copied().collect();
    classes.sort();
    classes.dedup();
    let mut report = score_predictions(&classes, &truth, &model.classes, &probabilities)?;
    report.zero_r_accuracy = Some(zero_r(&train_labels, &truth)?);
    let predictions = probabilities
        .iter()
        .map(|p| model.classes[crate::model::argmax(p)])
        .collect();
    Ok(SplitOutcome {
        report,
        model,
        pipeline,
        predictions,
        probabilities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub requested_folds: usize,
    pub folds_used: usize,
    pub folds: Vec<FoldResult>,
    /// Keyed by metric name: accuracy, macro_precision, macro_recall,
    /// macro_f1, roc_auc_ovr, zero_r_accuracy.
    pub summary: BTreeMap<String, MeanStd>,
    /// Confusion counts summed over folds.
    pub pooled: MetricsReport,
    pub warnings: Vec<String>,
}

impl CvReport {
    pub fn mean(&self, metric: &str) -> f64 {
        self.summary.get(metric).map_or(f64::NAN, |m| m.mean)
    }
}

fn summarize(folds: &[FoldResult]) -> BTreeMap<String, MeanStd> {
    let mut out = BTreeMap::new();
    let metrics: [(&str, fn(&MetricsReport) -> Option<f64>); 6] = [
        ("accuracy", |r| Some(r.accuracy)),
        ("macro_precision", |r| Some(r.macro_precision)),
        ("macro_recall", |r| Some(r.macro_recall)),
        ("macro_f1", |r| Some(r.macro_f1)),
        ("roc_auc_ovr", |r| r.roc_auc_ovr),
        ("zero_r_accuracy", |r| r.zero_r_accuracy),
    ];
    for (name, get) in metrics {
        let values: Vec<f64> = folds.iter().filter_map(|f| get(&f.report)).collect();
        if !values.is_empty() {
            out.insert(name.to_string(), MeanStd::of(&values));
        }
    }
    out
}

/// Stratified k-fold cross-validation. Every fit (vectorizer, selection,
/// oversampling, model) happens inside the fold on its training part. When
/// the smallest class has fewer than `folds` members the fold count drops
/// to that size, with a warning.
pub fn cross_validate(
    dataset: &Dataset,
    pipeline_config: &PipelineConfig,
    train_config: &TrainConfig,
    folds: usize,
    seed: u64,
    embeddings: Option<&EmbeddingStore>,
) -> Result<CvReport, EvalError> {
    let data = dataset.trainable();
    if data.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let labels = data.labels()?;
    let counts = data.class_counts();
    let smallest = counts.values().copied().min().unwrap_or(0);
    let mut warnings = Vec::new();
    let folds_used = folds.min(smallest);
    if folds_used < 2 {
        return Err(EvalError::TooFewForFolds { smallest, folds });
    }
    if folds_used < folds {
        let msg = format!("smallest class has {smallest} records; using {folds_used} folds instead of {folds}");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let assignment = stratified_folds(&labels, folds_used, seed);
    let results: Vec<Result<FoldResult, EvalError>> = (0..folds_used)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != f).collect();
            let test_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == f).collect();
            let train = data.subset(&train_idx);
            let test = data.subset(&test_idx);
            let mut pc = pipeline_config.clone();
            pc.seed = seed.wrapping_add(f as u64);
            let out = evaluate_split(&train.records, &test.records, &pc, train_config, embeddings)?;
            Ok(FoldResult {
                fold: f,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                report: out.report,
            })
        })
        .collect();
    let folds_out = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let classes: Vec<DomainLabel> = counts.keys().copied().collect();
    let mut pooled_cm = ConfusionMatrix::new(&classes);
    for f in &folds_out {
        for (i, &t) in f.report.confusion.classes.iter().enumerate() {
            for (j, &p) in f.report.confusion.classes.iter().enumerate() {
                let n = f.report.confusion.counts[i][j];
                for _ in 0..n {
                    pooled_cm.add(t, p);
                }
            }
        }
    }
    let mut pooled = metrics_from_confusion(&pooled_cm)?;
    pooled.zero_r_accuracy = Some(super::zero_r_from_counts(&counts)?);
    Ok(CvReport {
        requested_folds: folds,
        folds_used,
        summary: summarize(&folds_out),
        folds: folds_out,
        pooled,
        warnings,
    })
}

/// Fixed settings shared by every ablation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationBudget {
    pub folds: usize,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    /// When set, each row first searches for its own training config.
    pub search: Option<SearchBudget>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub preset: SourcePreset,
    pub name: String,
    pub n_features: usize,
    pub train_config: TrainConfig,
    pub cv: CvReport,
}

/// Cross-validates the five source configurations under the same budget.
pub fn ablation(
    dataset: &Dataset,
    budget: &AblationBudget,
    embeddings: Option<&EmbeddingStore>,
) -> Result<Vec<AblationRow>, EvalError> {
    let data = dataset.trainable();
    if data.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    SourcePreset::ALL
        .iter()
        .map(|&preset| {
            let pc = budget.pipeline.clone().with_preset(preset);
            let (fitted, full) = FittedPipeline::fit(&data.records, &pc, embeddings)?;
            let train_config = match &budget.search {
                Some(sb) => search(&full, sb)?.best_config,
                None => budget.train.clone(),
            };
            let cv = cross_validate(&data, &pc, &train_config, budget.folds, budget.seed, embeddings)?;
            Ok(AblationRow {
                preset,
                name: preset.name().to_string(),
                n_features: fitted.n_features(),
                train_config,
                cv,
            })
        })
        .collect()
}
