//! Multiclass gradient-boosted decision trees.
//!
//! Trees grow leaf-wise on softmax gradient statistics with Newton leaf
//! values. [`search`] samples training configurations at random and scores
//! them by stratified cross-validation; [`bundle`] persists a trained model
//! together with the feature pipeline that produced its inputs.

mod bundle;
mod gbdt;
mod search;
mod tree;

use thiserror::Error;

use crate::features::FeaturesError;

pub use bundle::{load_bundle, save_bundle, ModelBundle, BUNDLE_MAGIC, BUNDLE_SCHEMA_VERSION};
pub use gbdt::{argmax, train, train_traced, GbdtModel, TrainConfig};
pub use search::{sample_config, search, Objective, SearchBudget, SearchOutcome, TrialRecord};
pub use tree::{Node, Tree};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data needs at least two distinct classes")]
    DegenerateLabels,
    #[error("training data contains NaN or infinite values")]
    NonFiniteInput,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("row width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("search budget allowed no completed trial")]
    BudgetTooSmall,
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model bundle schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("model bundle checksum mismatch (file truncated or modified)")]
    ChecksumMismatch,
    #[error(transparent)]
    Features(#[from] FeaturesError),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::DegenerateLabels => "E-MODEL-DEGENERATE",
            ModelError::NonFiniteInput => "E-MODEL-NONFINITE",
            ModelError::InvalidConfig(_) => "E-MODEL-CONFIG",
            ModelError::WidthMismatch { .. } => "E-MODEL-WIDTH",
            ModelError::BudgetTooSmall => "E-MODEL-BUDGET",
            ModelError::Io { .. } => "E-MODEL-IO",
            ModelError::SchemaMismatch(_) => "E-MODEL-SCHEMA",
            ModelError::ChecksumMismatch => "E-MODEL-CHECKSUM",
            ModelError::Features(e) => e.code(),
        }
    }
}
