//! Numeric feature construction from repository records.
//!
//! Text fields become TF-IDF blocks (or precomputed embeddings), list-like
//! metadata becomes one-hot columns, and counts pass through as numerical
//! columns. Every column carries a [`FeatureColumnMeta`] naming its group
//! and source, which is what the ablation runner and the group-importance
//! report key on.

mod categorical;
mod matrix;
mod pipeline;
mod select;
mod smote;
mod text;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DomainLabel;
use crate::ingest::RepoRef;

pub use categorical::{encode_categorical, top_contributors, CategoricalEncoder, CategoricalSource};
pub use matrix::{assemble, numerical_features, FeatureMatrix, NumericalSource};
pub use pipeline::{FeatureSources, FittedPipeline, PipelineConfig, SourcePreset};
pub use select::{select_features, SelectionModel};
pub use smote::{smote, smote_with_provenance, SmoteOutput, SyntheticOrigin};
pub use text::{vectorize_text, EmbeddingStore, FittedTextVectorizer, TextField, TextVectorizerConfig, TfidfBlock};

#[derive(Debug, Error)]
pub enum FeaturesError {
    #[error("no embedding for repository {0}")]
    MissingEmbedding(RepoRef),
    #[error("embedding for {repo} has width {found}, expected {expected}")]
    EmbeddingWidth { repo: String, expected: usize, found: usize },
    #[error("embedding file line {line}: {detail}")]
    EmbeddingParse { line: usize, detail: String },
    #[error("text vocabulary is empty (every document is empty or below min_doc_freq)")]
    EmptyVocabulary,
    #[error("row count mismatch: {left} vs {right}")]
    RowMismatch { left: usize, right: usize },
    #[error("column count mismatch: expected {expected}, found {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("label vector has {labels} entries for {rows} rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("labels are required for this operation")]
    Unlabelled,
    #[error("at least two distinct classes are required")]
    DegenerateLabels,
    #[error("class {0} has fewer than two samples; cannot interpolate")]
    TooFewSamples(DomainLabel),
    #[error("no records given")]
    EmptyInput,
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FeaturesError {
    pub fn code(&self) -> &'static str {
        match self {
            FeaturesError::MissingEmbedding(_) => "E-FEAT-EMBEDDING",
            FeaturesError::EmbeddingWidth { .. } | FeaturesError::EmbeddingParse { .. } => "E-FEAT-EMBEDDING-FILE",
            FeaturesError::EmptyVocabulary => "E-FEAT-VOCAB",
            FeaturesError::RowMismatch { .. } | FeaturesError::ColumnMismatch { .. } => "E-FEAT-SHAPE",
            FeaturesError::DuplicateColumn(_) => "E-FEAT-COLUMN",
            FeaturesError::NonFinite { .. } => "E-FEAT-NONFINITE",
            FeaturesError::LabelCount { .. } | FeaturesError::Unlabelled => "E-FEAT-LABELS",
            FeaturesError::DegenerateLabels => "E-FEAT-DEGENERATE",
            FeaturesError::TooFewSamples(_) => "E-FEAT-SMOTE",
            FeaturesError::EmptyInput => "E-FEAT-EMPTY",
            FeaturesError::Io { .. } => "E-FEAT-IO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Textual,
    Categorical,
    Numerical,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Textual, FeatureGroup::Categorical, FeatureGroup::Numerical];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Textual => "textual",
            FeatureGroup::Categorical => "categorical",
            FeatureGroup::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Description,
    Readme,
    Labels,
    Topics,
    Licence,
    Languages,
    Contributors,
    RootEntries,
    Releases,
    Stars,
    Forks,
    Embedding,
}

/// Name, group and source of one matrix column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumnMeta {
    pub name: String,
    pub group: FeatureGroup,
    pub source: FeatureSource,
}

impl FeatureColumnMeta {
    pub fn new(name: impl Into<String>, group: FeatureGroup, source: FeatureSource) -> Self {
        Self {
            name: name.into(),
            group,
            source,
        }
    }
}
