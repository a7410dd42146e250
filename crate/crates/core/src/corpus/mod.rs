//! The labelled repository dataset: label schemes, records, cleaning,
//! splitting, statistics and persistence.

mod build;
mod clean;
mod io;
mod split;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{IngestError, RawRepo, RepoRef};

pub use build::{build_dataset, read_label_file, BuildReport};
pub use clean::{clean_text, mark_deprecated, DeprecationLexicon};
pub use io::{load_dataset, save_dataset, DATASET_SCHEMA_VERSION};
pub use split::{stratified_folds, stratified_split};
pub use stats::{dataset_stats, percent, round_to, DatasetStats, FeatureMissing, LabelSummary};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset mixes raw and merged label schemes")]
    MixedSchemes,
    #[error("expected a dataset in the {expected} label scheme")]
    WrongScheme { expected: LabelScheme },
    #[error("record {0} has no label")]
    Unlabelled(RepoRef),
    #[error("unknown domain label `{0}`")]
    UnknownLabel(String),
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch at line {line}: expected schema_version {expected}, {detail}")]
    SchemaMismatch { line: usize, expected: u32, detail: String },
    #[error("label file {path}: {detail}")]
    LabelFile { path: String, detail: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::EmptyDataset => "E-CORPUS-EMPTY",
            CorpusError::MixedSchemes | CorpusError::WrongScheme { .. } => "E-CORPUS-SCHEME",
            CorpusError::Unlabelled(_) => "E-CORPUS-UNLABELLED",
            CorpusError::UnknownLabel(_) => "E-CORPUS-LABEL",
            CorpusError::InvalidFraction(_) => "E-CORPUS-FRACTION",
            CorpusError::Io { .. } => "E-CORPUS-IO",
            CorpusError::SchemaMismatch { .. } => "E-CORPUS-SCHEMA",
            CorpusError::LabelFile { .. } => "E-CORPUS-LABELFILE",
            CorpusError::Ingest(e) => e.code(),
        }
    }
}

/// Application domains. The raw scheme has six classes; the merged scheme
/// folds Application Software and System Software into one class.
///
/// Variant order is alphabetical by display name and defines class order
/// everywhere (confusion matrices, model outputs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainLabel {
    ApplicationSoftware,
    ApplicationAndSystemSoftware,
    Documentation,
    NonWebLibsFrameworks,
    SoftwareTools,
    SystemSoftware,
    WebLibsFrameworks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    Raw,
    Merged,
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelScheme::Raw => "raw (6-class)",
            LabelScheme::Merged => "merged (5-class)",
        })
    }
}

impl DomainLabel {
    pub const RAW: [DomainLabel; 6] = [
        DomainLabel::ApplicationSoftware,
        DomainLabel::Documentation,
        DomainLabel::NonWebLibsFrameworks,
        DomainLabel::SoftwareTools,
        DomainLabel::SystemSoftware,
        DomainLabel::WebLibsFrameworks,
    ];

    pub const MERGED: [DomainLabel; 5] = [
        DomainLabel::ApplicationAndSystemSoftware,
        DomainLabel::Documentation,
        DomainLabel::NonWebLibsFrameworks,
        DomainLabel::SoftwareTools,
        DomainLabel::WebLibsFrameworks,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            DomainLabel::ApplicationSoftware => "Application Software",
            DomainLabel::ApplicationAndSystemSoftware => "Application & System Software",
            DomainLabel::Documentation => "Documentation",
            DomainLabel::NonWebLibsFrameworks => "Non-Web Libs & Frameworks",
            DomainLabel::SoftwareTools => "Software Tools",
            DomainLabel::SystemSoftware => "System Software",
            DomainLabel::WebLibsFrameworks => "Web Libs & Frameworks",
        }
    }

    /// Stable machine name (the serialized form).
    pub fn slug(self) -> &'static str {
        match self {
            DomainLabel::ApplicationSoftware => "application_software",
            DomainLabel::ApplicationAndSystemSoftware => "application_and_system_software",
            DomainLabel::Documentation => "documentation",
            DomainLabel::NonWebLibsFrameworks => "non_web_libs_frameworks",
            DomainLabel::SoftwareTools => "software_tools",
            DomainLabel::SystemSoftware => "system_software",
            DomainLabel::WebLibsFrameworks => "web_libs_frameworks",
        }
    }

    /// Schemes this label belongs to. Shared labels belong to both.
    pub fn in_scheme(self, scheme: LabelScheme) -> bool {
        match self {
            DomainLabel::ApplicationSoftware | DomainLabel::SystemSoftware => scheme == LabelScheme::Raw,
            DomainLabel::ApplicationAndSystemSoftware => scheme == LabelScheme::Merged,
            _ => true,
        }
    }

    /// The merged-scheme counterpart of this label.
    pub fn merged(self) -> DomainLabel {
        match self {
            DomainLabel::ApplicationSoftware | DomainLabel::SystemSoftware => {
                DomainLabel::ApplicationAndSystemSoftware
            }
            other => other,
        }
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for DomainLabel {
    type Err = CorpusError;

    /// Accepts slugs, display names and loose spellings such as
    /// "Web Libraries and Frameworks".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .to_lowercase()
            .replace("libraries", "libs")
            .replace('&', "and")
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        let label = match key.as_str() {
            "applicationsoftware" => DomainLabel::ApplicationSoftware,
            "applicationandsystemsoftware" => DomainLabel::ApplicationAndSystemSoftware,
            "documentation" => DomainLabel::Documentation,
            "nonweblibsframeworks" | "nonweblibsandframeworks" => DomainLabel::NonWebLibsFrameworks,
            "softwaretools" => DomainLabel::SoftwareTools,
            "systemsoftware" => DomainLabel::SystemSoftware,
            "weblibsframeworks" | "weblibsandframeworks" => DomainLabel::WebLibsFrameworks,
            _ => return Err(CorpusError::UnknownLabel(s.to_string())),
        };
        Ok(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepoStatus {
    Active,
    Gone,
    Deprecated,
}

/// One repository in feature-ready form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoRecord {
    #[serde(rename = "ref")]
    pub repo: RepoRef,
    pub label: Option<DomainLabel>,
    pub cleaned_readme: String,
    /// Kept absent in storage; features read it as an empty string.
    pub description: Option<String>,
    pub topics: Vec<String>,
    pub labels: Vec<String>,
    pub root_entries: Vec<String>,
    pub contributor_logins: Vec<String>,
    pub languages: BTreeMap<String, u64>,
    pub licence_key: Option<String>,
    pub releases: u64,
    pub stars: u64,
    pub forks: u64,
    pub has_workflow_files: bool,
    pub status: RepoStatus,
}

impl RepoRecord {
    pub fn from_raw(raw: &RawRepo, label: Option<DomainLabel>) -> Self {
        Self {
            repo: raw.repo.clone(),
            label,
            cleaned_readme: clean_text(raw.readme.as_deref().unwrap_or("")),
            description: raw.description.clone(),
            topics: raw.topics.clone(),
            labels: raw.labels.clone(),
            root_entries: raw.root_entries.clone(),
            contributor_logins: raw.contributors.iter().map(|c| c.login.clone()).collect(),
            languages: raw.languages.clone(),
            licence_key: raw.licence_key.clone(),
            releases: raw.releases,
            stars: raw.stars,
            forks: raw.forks,
            has_workflow_files: raw.has_workflow_files,
            status: RepoStatus::Active,
        }
    }

    /// Placeholder for a repository that could not be fetched any more.
    pub fn gone(repo: RepoRef, label: Option<DomainLabel>) -> Self {
        Self {
            repo,
            label,
            cleaned_readme: String::new(),
            description: None,
            topics: Vec::new(),
            labels: Vec::new(),
            root_entries: Vec::new(),
            contributor_logins: Vec::new(),
            languages: BTreeMap::new(),
            licence_key: None,
            releases: 0,
            stars: 0,
            forks: 0,
            has_workflow_files: false,
            status: RepoStatus::Gone,
        }
    }

    pub fn description_text(&self) -> &str {
        self.description.as_deref().unwrap_or("")
    }
}

/// An ordered collection of records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<RepoRecord>,
}

impl Dataset {
    pub fn new(records: Vec<RepoRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The scheme of the labels present, `None` when every label is shared
    /// by both schemes (or no label is present).
    pub fn scheme(&self) -> Result<Option<LabelScheme>, CorpusError> {
        let labels = self.records.iter().filter_map(|r| r.label);
        let mut raw_only = false;
        let mut merged_only = false;
        for l in labels {
            raw_only |= !l.in_scheme(LabelScheme::Merged);
            merged_only |= !l.in_scheme(LabelScheme::Raw);
        }
        match (raw_only, merged_only) {
            (true, true) => Err(CorpusError::MixedSchemes),
            (true, false) => Ok(Some(LabelScheme::Raw)),
            (false, true) => Ok(Some(LabelScheme::Merged)),
            (false, false) => Ok(None),
        }
    }

    /// Active, labelled records: the ones used for training and evaluation.
    pub fn trainable(&self) -> Dataset {
        Dataset::new(
            self.records
                .iter()
                .filter(|r| r.status == RepoStatus::Active && r.label.is_some())
                .cloned()
                .collect(),
        )
    }

    /// Labels of every record; errors on the first unlabelled record.
    pub fn labels(&self) -> Result<Vec<DomainLabel>, CorpusError> {
        self.records
            .iter()
            .map(|r| r.label.ok_or_else(|| CorpusError::Unlabelled(r.repo.clone())))
            .collect()
    }

    pub fn class_counts(&self) -> BTreeMap<DomainLabel, usize> {
        let mut counts = BTreeMap::new();
        for l in self.records.iter().filter_map(|r| r.label) {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.records[i].clone()).collect())
    }
}

/// Folds Application Software and System Software into the merged class.
/// Every other field, and the record order, is untouched.
pub fn merge_labels(dataset: &Dataset) -> Result<Dataset, CorpusError> {
    if dataset.scheme()? == Some(LabelScheme::Merged) {
        return Err(CorpusError::WrongScheme {
            expected: LabelScheme::Raw,
        });
    }
    let records = dataset
        .records
        .iter()
        .map(|r| RepoRecord {
            label: r.label.map(DomainLabel::merged),
            ..r.clone()
        })
        .collect();
    Ok(Dataset::new(records))
}
