//! Evaluation protocol: confusion matrices and the metrics derived from
//! them, one-vs-rest ROC-AUC, the ZeroR baseline, stratified
//! cross-validation and the data-source ablation.

mod cv;
mod metrics;
mod report;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::features::FeaturesError;
use crate::model::ModelError;

pub use cv::{
    ablation, cross_validate, evaluate_split, score_predictions, AblationBudget, AblationRow, CvReport, FoldResult,
    MeanStd, SplitOutcome,
};
pub use metrics::{
    binary_auc, metrics_from_confusion, modal_label, roc_auc_ovr, zero_r, zero_r_from_counts, ClassMetrics,
    ConfusionMatrix, MetricsReport, RocAuc,
};
pub use report::{
    ablation_csv, ablation_text, confusion_csv, confusion_text, cv_csv, cv_text, fmt_num, metrics_csv, metrics_text,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("dataset has no labelled, active records")]
    EmptyDataset,
    #[error("smallest class has {smallest} records; cannot build even 2 of the requested {folds} folds")]
    TooFewForFolds { smallest: usize, folds: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::EmptyMatrix => "E-EVAL-EMPTY-MATRIX",
            EvalError::EmptyDataset => "E-EVAL-EMPTY-DATASET",
            EvalError::TooFewForFolds { .. } => "E-EVAL-FOLDS",
            EvalError::Shape(_) => "E-EVAL-SHAPE",
            EvalError::Corpus(e) => e.code(),
            EvalError::Features(e) => e.code(),
            EvalError::Model(e) => e.code(),
        }
    }
}
