use serde::{Deserialize, Serialize};

use super::{
    assemble, numerical_features, select_features, smote, top_contributors, CategoricalEncoder, CategoricalSource,
    EmbeddingStore, FeatureMatrix, FeaturesError, FittedTextVectorizer, NumericalSource, SelectionModel, TextField,
    TextVectorizerConfig,
};
use crate::corpus::RepoRecord;

/// Which record fields feed the matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSources {
    pub text: Vec<TextField>,
    pub categorical: Vec<CategoricalSource>,
    pub numerical: Vec<NumericalSource>,
}

impl FeatureSources {
    pub fn all() -> Self {
        SourcePreset::All.sources()
    }
}

/// The five source configurations compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePreset {
    DescriptionOnly,
    ReadmeOnly,
    TextualOnly,
    TextualCategorical,
    All,
}

impl SourcePreset {
    pub const ALL: [SourcePreset; 5] = [
        SourcePreset::DescriptionOnly,
        SourcePreset::ReadmeOnly,
        SourcePreset::TextualOnly,
        SourcePreset::TextualCategorical,
        SourcePreset::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourcePreset::DescriptionOnly => "Description only",
            SourcePreset::ReadmeOnly => "README only",
            SourcePreset::TextualOnly => "Textual data only",
            SourcePreset::TextualCategorical => "Textual and categorical data",
            SourcePreset::All => "Textual, categorical and numerical data",
        }
    }

    pub fn sources(self) -> FeatureSources {
        let (text, categorical, numerical) = match self {
            SourcePreset::DescriptionOnly => (vec![TextField::Description], vec![], vec![]),
            SourcePreset::ReadmeOnly => (vec![TextField::Readme], vec![], vec![]),
            SourcePreset::TextualOnly => (TextField::ALL.to_vec(), vec![], vec![]),
            SourcePreset::TextualCategorical => (TextField::ALL.to_vec(), CategoricalSource::ALL.to_vec(), vec![]),
            SourcePreset::All => (
                TextField::ALL.to_vec(),
                CategoricalSource::ALL.to_vec(),
                NumericalSource::ALL.to_vec(),
            ),
        };
        FeatureSources {
            text,
            categorical,
            numerical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub sources: FeatureSources,
    pub text: TextVectorizerConfig,
    /// Linear-SVM regularisation for categorical selection; `None` keeps all.
    pub selection_c: Option<f64>,
    /// Per-label contributor cap; `None` keeps every login.
    pub top_contributors_k: Option<usize>,
    /// SMOTE neighbour count for training data; `None` disables oversampling.
    pub smote_k: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sources: FeatureSources::all(),
            text: TextVectorizerConfig::default(),
            selection_c: Some(0.01),
            top_contributors_k: Some(50),
            smote_k: Some(5),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn with_preset(mut self, preset: SourcePreset) -> Self {
        self.sources = preset.sources();
        self
    }
}

/// Everything learned from the training records; applies unchanged to any
/// later records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub text: Option<FittedTextVectorizer>,
    pub categorical: Option<CategoricalEncoder>,
    pub selection: SelectionModel,
}

impl FittedPipeline {
    /// Fits on labelled training records and returns the transformed
    /// training matrix (before any oversampling).
    pub fn fit(
        records: &[RepoRecord],
        config: &PipelineConfig,
        embeddings: Option<&EmbeddingStore>,
    ) -> Result<(Self, FeatureMatrix), FeaturesError> {
        if records.is_empty() {
            return Err(FeaturesError::EmptyInput);
        }
        let labels = records
            .iter()
            .map(|r| r.label.ok_or(FeaturesError::Unlabelled))
            .collect::<Result<Vec<_>, _>>()?;
        let text_wanted = !config.sources.text.is_empty()
            || matches!(config.text, TextVectorizerConfig::PrecomputedEmbedding { .. });
        let text = if text_wanted {
            Some(FittedTextVectorizer::fit(records, &config.text, &config.sources.text)?)
        } else {
            None
        };
        let categorical = if config.sources.categorical.is_empty() {
            None
        } else {
            let filter = match config.top_contributors_k {
                Some(k) if config.sources.categorical.contains(&CategoricalSource::Contributors) => {
                    Some(top_contributors(records, k)?)
                }
                _ => None,
            };
            Some(CategoricalEncoder::fit(records, &config.sources.categorical, filter.as_ref())?)
        };
        let mut fitted = FittedPipeline {
            config: config.clone(),
            text,
            categorical,
            selection: SelectionModel::identity(0),
        };
        let full = fitted.raw_matrix(records, embeddings)?.with_labels(Some(labels))?;
        fitted.selection = match config.selection_c {
            Some(c) => select_features(&full, c, config.seed)?,
            None => SelectionModel::identity(full.n_cols()),
        };
        let selected = fitted.selection.transform(&full)?;
        Ok((fitted, selected))
    }

    fn raw_matrix(&self, records: &[RepoRecord], embeddings: Option<&EmbeddingStore>) -> Result<FeatureMatrix, FeaturesError> {
        let text = self.text.as_ref().map(|t| t.transform(records, embeddings)).transpose()?;
        let cat = self.categorical.as_ref().map(|c| c.transform(records));
        let num = (!self.config.sources.numerical.is_empty())
            .then(|| numerical_features(records, &self.config.sources.numerical));
        assemble(text.as_ref(), cat.as_ref(), num.as_ref())
    }

    /// Transforms records with the fitted state. Labels are attached when
    /// every record has one.
    pub fn transform(&self, records: &[RepoRecord], embeddings: Option<&EmbeddingStore>) -> Result<FeatureMatrix, FeaturesError> {
        let labels: Option<Vec<_>> = records.iter().map(|r| r.label).collect();
        let m = self.selection.transform(&self.raw_matrix(records, embeddings)?)?;
        m.with_labels(labels.filter(|l| !l.is_empty()))
    }

    /// Applies SMOTE to a training matrix when the config enables it.
    pub fn oversample(&self, train: FeatureMatrix) -> Result<FeatureMatrix, FeaturesError> {
        match self.config.smote_k {
            Some(k) => smote(&train, k, self.config.seed),
            None => Ok(train),
        }
    }

    pub fn n_features(&self) -> usize {
        self.selection.kept_columns.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::record;
    use crate::corpus::DomainLabel::{self, *};
    use crate::features::{FeatureGroup, FeatureSource};

    fn corpus() -> Vec<RepoRecord> {
        let cases: [(DomainLabel, &str, &str, &str); 3] = [
            (Documentation, "awesome list of links", "curated", "markdown"),
            (WebLibsFrameworks, "http router server", "web framework", "javascript"),
            (SoftwareTools, "command line tool", "cli utility", "rust"),
        ];
        let mut out = Vec::new();
        for i in 0..12 {
            let (label, readme, desc, topic) = cases[i % 3];
            let mut r = record(&format!("r{i}"), Some(label));
            r.cleaned_readme = format!("{readme} extra{}", i % 2);
            r.description = Some(desc.into());
            r.topics = vec![topic.into(), format!("t{}", i % 4)];
            r.contributor_logins = vec![format!("dev{}", i % 5)];
            r.stars = i as u64 * 10;
            out.push(r);
        }
        out
    }

    #[test]
    fn description_only_preset_uses_only_description_columns() {
        let cfg = PipelineConfig {
            text: TextVectorizerConfig::Tfidf {
                vocab_size_cap: 100,
                min_doc_freq: 1,
            },
            ..PipelineConfig::default()
        }
        .with_preset(SourcePreset::DescriptionOnly);
        let (_, m) = FittedPipeline::fit(&corpus(), &cfg, None).unwrap();
        assert!(m.n_cols() > 0);
        assert!(m.columns().iter().all(|c| c.source == FeatureSource::Description));
    }

    #[test]
    fn all_sources_cover_every_group() {
        let cfg = PipelineConfig {
            text: TextVectorizerConfig::Tfidf {
                vocab_size_cap: 100,
                min_doc_freq: 1,
            },
            ..PipelineConfig::default()
        };
        let recs = corpus();
        let (fitted, m) = FittedPipeline::fit(&recs, &cfg, None).unwrap();
        for g in FeatureGroup::ALL {
            assert!(!m.group_columns(g).is_empty(), "{g:?}");
        }
        assert_eq!(fitted.transform(&recs, None).unwrap(), m);
        let balanced = fitted.oversample(m.clone()).unwrap();
        assert_eq!(balanced.n_rows(), m.n_rows());
    }

    #[test]
    fn presets_are_nested() {
        let names: Vec<_> = SourcePreset::ALL.iter().map(|p| p.name()).collect();
        assert_eq!(names.len(), 5);
        let all = SourcePreset::All.sources();
        assert_eq!(all.numerical.len(), 3);
        assert!(SourcePreset::TextualCategorical.sources().numerical.is_empty());
    }
}
