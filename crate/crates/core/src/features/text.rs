use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureColumnMeta, FeatureGroup, FeatureMatrix, FeatureSource, FeaturesError};
use crate::corpus::RepoRecord;
use crate::ingest::RepoRef;

/// Record fields treated as free text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextField {
    Description,
    Readme,
    Labels,
}

impl TextField {
    pub const ALL: [TextField; 3] = [TextField::Description, TextField::Readme, TextField::Labels];

    fn prefix(self) -> &'static str {
        match self {
            TextField::Description => "description",
            TextField::Readme => "readme",
            TextField::Labels => "labels",
        }
    }

    fn source(self) -> FeatureSource {
        match self {
            TextField::Description => FeatureSource::Description,
            TextField::Readme => FeatureSource::Readme,
            TextField::Labels => FeatureSource::Labels,
        }
    }

    fn text(self, r: &RepoRecord) -> String {
        match self {
            TextField::Description => r.description_text().to_string(),
            TextField::Readme => r.cleaned_readme.clone(),
            TextField::Labels => r.labels.join(" "),
        }
    }
}

/// How text is turned into numbers. Exactly one mode is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TextVectorizerConfig {
    Tfidf { vocab_size_cap: usize, min_doc_freq: usize },
    PrecomputedEmbedding { embedding_dim: usize },
}

impl Default for TextVectorizerConfig {
    fn default() -> Self {
        TextVectorizerConfig::Tfidf {
            vocab_size_cap: 20_000,
            min_doc_freq: 2,
        }
    }
}

/// Lower-cases and splits on anything that is not alphanumeric.
fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Vocabulary and inverse document frequencies of one text field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfBlock {
    pub field: TextField,
    /// Term to column offset within the block; offsets follow term order.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
}

impl TfidfBlock {
    fn fit(docs: &[String], field: TextField, vocab_size_cap: usize, min_doc_freq: usize) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let mut terms: Vec<String> = tokenize(doc).collect();
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = df.into_iter().filter(|(_, d)| *d >= min_doc_freq).collect();
        if kept.len() > vocab_size_cap {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            kept.truncate(vocab_size_cap);
        }
        kept.sort_by(|a, b| a.0.cmp(&b.0));
        let n = docs.len() as f64;
        let idf = kept
            .iter()
            .map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        let vocabulary = kept.into_iter().enumerate().map(|(i, (t, _))| (t, i)).collect();
        Self { field, vocabulary, idf }
    }

    fn len(&self) -> usize {
        self.idf.len()
    }

    fn columns(&self) -> impl Iterator<Item = FeatureColumnMeta> + '_ {
        self.vocabulary.keys().map(move |t| {
            FeatureColumnMeta::new(
                format!("{}:{t}", self.field.prefix()),
                FeatureGroup::Textual,
                self.field.source(),
            )
        })
    }

    /// Writes raw `tf * idf` weights into `out` (length `self.len()`).
    fn weigh(&self, doc: &str, out: &mut [f64]) {
        for t in tokenize(doc) {
            if let Some(&j) = self.vocabulary.get(&t) {
                out[j] += self.idf[j];
            }
        }
    }
}

/// Precomputed document embeddings keyed by repository.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<RepoRef, Vec<f64>>,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    #[serde(rename = "ref")]
    repo: RepoRef,
    vector: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, repo: RepoRef, vector: Vec<f64>) -> Result<(), FeaturesError> {
        if vector.len() != self.dim {
            return Err(FeaturesError::EmbeddingWidth {
                repo: repo.to_string(),
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vectors.insert(repo, vector);
        Ok(())
    }

    pub fn get(&self, repo: &RepoRef) -> Option<&[f64]> {
        self.vectors.get(repo).map(Vec::as_slice)
    }

    /// Loads `{"ref": "owner/name", "vector": [...]}` lines. All vectors must
    /// share the width of the first line.
    pub fn load(path: &Path) -> Result<Self, FeaturesError> {
        let file = fs::File::open(path).map_err(|source| FeaturesError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut store: Option<EmbeddingStore> = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| FeaturesError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: EmbeddingLine = serde_json::from_str(&line).map_err(|e| FeaturesError::EmbeddingParse {
                line: i + 1,
                detail: e.to_string(),
            })?;
            if parsed.vector.iter().any(|v| !v.is_finite()) {
                return Err(FeaturesError::EmbeddingParse {
                    line: i + 1,
                    detail: "non-finite component".into(),
                });
            }
            let s = store.get_or_insert_with(|| EmbeddingStore::new(parsed.vector.len()));
            s.insert(parsed.repo, parsed.vector)?;
        }
        Ok(store.unwrap_or_default())
    }
}

/// A text vectorizer after fitting, ready to transform unseen records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FittedTextVectorizer {
    Tfidf { blocks: Vec<TfidfBlock> },
    PrecomputedEmbedding { embedding_dim: usize },
}

impl FittedTextVectorizer {
    /// Fits on `records`. In TF-IDF mode each field gets its own vocabulary
    /// block; in embedding mode nothing is learned.
    pub fn fit(
        records: &[RepoRecord],
        config: &TextVectorizerConfig,
        fields: &[TextField],
    ) -> Result<Self, FeaturesError> {
        if records.is_empty() {
            return Err(FeaturesError::EmptyInput);
        }
        match *config {
            TextVectorizerConfig::Tfidf {
                vocab_size_cap,
                min_doc_freq,
            } => {
                let blocks: Vec<TfidfBlock> = fields
                    .iter()
                    .map(|&f| {
                        let docs: Vec<String> = records.iter().map(|r| f.text(r)).collect();
                        TfidfBlock::fit(&docs, f, vocab_size_cap, min_doc_freq.max(1))
                    })
                    .collect();
                if blocks.iter().all(|b| b.len() == 0) {
                    return Err(FeaturesError::EmptyVocabulary);
                }
                Ok(FittedTextVectorizer::Tfidf { blocks })
            }
            TextVectorizerConfig::PrecomputedEmbedding { embedding_dim } => {
                Ok(FittedTextVectorizer::PrecomputedEmbedding { embedding_dim })
            }
        }
    }

    pub fn columns(&self) -> Vec<FeatureColumnMeta> {
        match self {
            FittedTextVectorizer::Tfidf { blocks } => blocks.iter().flat_map(|b| b.columns()).collect(),
            FittedTextVectorizer::PrecomputedEmbedding { embedding_dim } => (0..*embedding_dim)
                .map(|i| FeatureColumnMeta::new(format!("embedding:{i}"), FeatureGroup::Textual, FeatureSource::Embedding))
                .collect(),
        }
    }

    /// TF-IDF rows are L2-normalised across all blocks (all-zero rows stay
    /// zero); embedding rows are copied verbatim from `embeddings`.
    pub fn transform(
        &self,
        records: &[RepoRecord],
        embeddings: Option<&EmbeddingStore>,
    ) -> Result<FeatureMatrix, FeaturesError> {
        let columns = self.columns();
        let width = columns.len();
        let mut data = vec![0.0; records.len() * width];
        match self {
            FittedTextVectorizer::Tfidf { blocks } => {
                for (i, r) in records.iter().enumerate() {
                    let row = &mut data[i * width..(i + 1) * width];
                    let mut offset = 0;
                    for b in blocks {
                        b.weigh(&b.field.text(r), &mut row[offset..offset + b.len()]);
                        offset += b.len();
                    }
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        row.iter_mut().for_each(|v| *v /= norm);
                    }
                }
            }
            FittedTextVectorizer::PrecomputedEmbedding { embedding_dim } => {
                let store = embeddings.ok_or_else(|| match records.first() {
                    Some(r) => FeaturesError::MissingEmbedding(r.repo.clone()),
                    None => FeaturesError::EmptyInput,
                })?;
                if store.dim() != *embedding_dim && !store.is_empty() {
                    return Err(FeaturesError::EmbeddingWidth {
                        repo: "<file>".into(),
                        expected: *embedding_dim,
                        found: store.dim(),
                    });
                }
                for (i, r) in records.iter().enumerate() {
                    let v = store
                        .get(&r.repo)
                        .ok_or_else(|| FeaturesError::MissingEmbedding(r.repo.clone()))?;
                    data[i * width..(i + 1) * width].copy_from_slice(v);
                }
            }
        }
        FeatureMatrix::from_flat(data, records.len(), columns, None)
    }
}

/// Fits a text vectorizer on `records` and transforms them in one step.
pub fn vectorize_text(
    records: &[RepoRecord],
    config: &TextVectorizerConfig,
    fields: &[TextField],
    embeddings: Option<&EmbeddingStore>,
) -> Result<(FittedTextVectorizer, FeatureMatrix), FeaturesError> {
    let fitted = FittedTextVectorizer::fit(records, config, fields)?;
    let matrix = fitted.transform(records, embeddings)?;
    Ok((fitted, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::record;
    use proptest::prelude::*;

    fn docs(texts: &[&str]) -> Vec<RepoRecord> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut r = record(&format!("r{i}"), None);
                r.cleaned_readme = t.to_string();
                r
            })
            .collect()
    }

    const TFIDF1: TextVectorizerConfig = TextVectorizerConfig::Tfidf {
        vocab_size_cap: 100,
        min_doc_freq: 1,
    };

    #[test]
    fn identical_documents_identical_rows() {
        let recs = docs(&["rust web server", "rust web server", "other"]);
        let (_, m) = vectorize_text(&recs, &TFIDF1, &[TextField::Readme], None).unwrap();
        assert_eq!(m.row(0), m.row(1));
    }

    #[test]
    fn idf_is_monotone_in_document_frequency() {
        let recs = docs(&["a b", "a"]);
        let (fitted, _) = vectorize_text(&recs, &TFIDF1, &[TextField::Readme], None).unwrap();
        let FittedTextVectorizer::Tfidf { blocks } = fitted else { unreachable!() };
        let b = &blocks[0];
        let idf_a = b.idf[b.vocabulary["a"]];
        let idf_b = b.idf[b.vocabulary["b"]];
        assert!(idf_a < idf_b);
        assert!((idf_a - ((3.0f64 / 3.0).ln() + 1.0)).abs() < 1e-12);
        assert!((idf_b - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn min_doc_freq_and_cap() {
        let recs = docs(&["common rare1", "common rare2", "common mid", "mid"]);
        let cfg = TextVectorizerConfig::Tfidf {
            vocab_size_cap: 100,
            min_doc_freq: 2,
        };
        let (_, m) = vectorize_text(&recs, &cfg, &[TextField::Readme], None).unwrap();
        let names: Vec<_> = m.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["readme:common", "readme:mid"]);
        let capped = TextVectorizerConfig::Tfidf {
            vocab_size_cap: 1,
            min_doc_freq: 1,
        };
        let (_, m) = vectorize_text(&recs, &capped, &[TextField::Readme], None).unwrap();
        assert_eq!(m.columns()[0].name, "readme:common");
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        let toks: Vec<_> = tokenize("Hello, WORLD! foo_bar x2").collect();
        assert_eq!(toks, vec!["hello", "world", "foo", "bar", "x2"]);
    }

    #[test]
    fn empty_corpus_has_empty_vocabulary() {
        let recs = docs(&["", ""]);
        assert!(matches!(
            vectorize_text(&recs, &TFIDF1, &[TextField::Readme], None),
            Err(FeaturesError::EmptyVocabulary)
        ));
    }

    #[test]
    fn fields_become_separate_blocks() {
        let mut recs = docs(&["readme words", "more readme"]);
        recs[0].description = Some("short desc".into());
        recs[1].labels = vec!["bug".into(), "good first issue".into()];
        let (_, m) = vectorize_text(&recs, &TFIDF1, &TextField::ALL, None).unwrap();
        assert!(m.columns().iter().any(|c| c.name == "description:desc" && c.source == FeatureSource::Description));
        assert!(m.columns().iter().any(|c| c.name == "labels:first" && c.source == FeatureSource::Labels));
        let (_, d) = vectorize_text(&recs, &TFIDF1, &[TextField::Description], None).unwrap();
        assert!(d.columns().iter().all(|c| c.source == FeatureSource::Description));
    }

    #[test]
    fn unseen_terms_are_ignored_on_transform() {
        let recs = docs(&["alpha beta", "beta"]);
        let (fitted, _) = vectorize_text(&recs, &TFIDF1, &[TextField::Readme], None).unwrap();
        let m = fitted.transform(&docs(&["gamma delta"]), None).unwrap();
        assert!(m.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn precomputed_embeddings_copied_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let recs = docs(&["x", "y"]);
        let mut lines = String::new();
        for (i, r) in recs.iter().enumerate() {
            let v: Vec<f64> = (0..768).map(|j| (i * 768 + j) as f64 / 1000.0).collect();
            lines.push_str(&serde_json::json!({"ref": r.repo.to_string(), "vector": v}).to_string());
            lines.push('\n');
        }
        fs::write(&path, lines).unwrap();
        let store = EmbeddingStore::load(&path).unwrap();
        let cfg = TextVectorizerConfig::PrecomputedEmbedding { embedding_dim: 768 };
        let (_, m) = vectorize_text(&recs, &cfg, &[], Some(&store)).unwrap();
        assert_eq!(m.n_cols(), 768);
        assert_eq!(m.get(1, 5), (768 + 5) as f64 / 1000.0);

        let extra = docs(&["x", "y", "z"]);
        assert!(matches!(
            vectorize_text(&extra, &cfg, &[], Some(&store)),
            Err(FeaturesError::MissingEmbedding(_))
        ));
    }

    proptest! {
        #[test]
        fn rows_have_unit_or_zero_norm(texts in prop::collection::vec("[a-e ]{0,20}", 2..12)) {
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let recs = docs(&refs);
            if let Ok((_, m)) = vectorize_text(&recs, &TFIDF1, &[TextField::Readme], None) {
                for row in m.rows() {
                    let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
