use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FeatureColumnMeta, FeatureGroup, FeatureMatrix, FeatureSource, FeaturesError};
use crate::corpus::{DomainLabel, RepoRecord};

/// Record fields encoded as one-hot columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalSource {
    Topics,
    Licence,
    Languages,
    Contributors,
    RootEntries,
}

impl CategoricalSource {
    pub const ALL: [CategoricalSource; 5] = [
        CategoricalSource::Topics,
        CategoricalSource::Licence,
        CategoricalSource::Languages,
        CategoricalSource::Contributors,
        CategoricalSource::RootEntries,
    ];

    fn prefix(self) -> &'static str {
        match self {
            CategoricalSource::Topics => "topics",
            CategoricalSource::Licence => "licence",
            CategoricalSource::Languages => "languages",
            CategoricalSource::Contributors => "contributors",
            CategoricalSource::RootEntries => "root_entries",
        }
    }

    fn source(self) -> FeatureSource {
        match self {
            CategoricalSource::Topics => FeatureSource::Topics,
            CategoricalSource::Licence => FeatureSource::Licence,
            CategoricalSource::Languages => FeatureSource::Languages,
            CategoricalSource::Contributors => FeatureSource::Contributors,
            CategoricalSource::RootEntries => FeatureSource::RootEntries,
        }
    }

    /// Distinct values a record holds for this source. Languages count by
    /// presence; byte counts are ignored.
    fn values(self, r: &RepoRecord) -> BTreeSet<&str> {
        match self {
            CategoricalSource::Topics => r.topics.iter().map(String::as_str).collect(),
            CategoricalSource::Licence => r.licence_key.iter().map(String::as_str).collect(),
            CategoricalSource::Languages => r.languages.keys().map(String::as_str).collect(),
            CategoricalSource::Contributors => r.contributor_logins.iter().map(String::as_str).collect(),
            CategoricalSource::RootEntries => r.root_entries.iter().map(String::as_str).collect(),
        }
    }
}

/// Per-source vocabularies learned from a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalEncoder {
    vocabularies: Vec<(CategoricalSource, Vec<String>)>,
}

impl CategoricalEncoder {
    /// Collects each source's distinct values. When `contributor_filter` is
    /// given, only those logins become contributor columns.
    pub fn fit(
        records: &[RepoRecord],
        sources: &[CategoricalSource],
        contributor_filter: Option<&BTreeSet<String>>,
    ) -> Result<Self, FeaturesError> {
        if records.is_empty() {
            return Err(FeaturesError::EmptyInput);
        }
        let vocabularies = sources
            .iter()
            .map(|&s| {
                let mut vocab: BTreeSet<&str> = BTreeSet::new();
                for r in records {
                    vocab.extend(s.values(r));
                }
                let vocab: Vec<String> = vocab
                    .into_iter()
                    .filter(|v| match (s, contributor_filter) {
                        (CategoricalSource::Contributors, Some(keep)) => keep.contains(*v),
                        _ => true,
                    })
                    .map(str::to_string)
                    .collect();
                (s, vocab)
            })
            .collect();
        Ok(Self { vocabularies })
    }

    pub fn columns(&self) -> Vec<FeatureColumnMeta> {
        self.vocabularies
            .iter()
            .flat_map(|(s, vocab)| {
                vocab.iter().map(move |v| {
                    FeatureColumnMeta::new(format!("{}={v}", s.prefix()), FeatureGroup::Categorical, s.source())
                })
            })
            .collect()
    }

    /// One row per record; values outside the fitted vocabulary are ignored.
    pub fn transform(&self, records: &[RepoRecord]) -> FeatureMatrix {
        let columns = self.columns();
        let width = columns.len();
        let mut data = vec![0.0; records.len() * width];
        for (i, r) in records.iter().enumerate() {
            let mut offset = 0;
            for (s, vocab) in &self.vocabularies {
                for v in s.values(r) {
                    if let Ok(j) = vocab.binary_search_by(|x| x.as_str().cmp(v)) {
                        data[i * width + offset + j] = 1.0;
                    }
                }
                offset += vocab.len();
            }
        }
        FeatureMatrix::from_flat(data, records.len(), columns, None).expect("one-hot columns are valid")
    }
}

/// Fits and applies a one-hot encoder in one step.
pub fn encode_categorical(records: &[RepoRecord], sources: &[CategoricalSource]) -> Result<FeatureMatrix, FeaturesError> {
    Ok(CategoricalEncoder::fit(records, sources, None)?.transform(records))
}

/// The `k` logins appearing in the most repositories of each label, unioned
/// over labels. Ties go to the lexicographically smaller login.
pub fn top_contributors(records: &[RepoRecord], k: usize) -> Result<BTreeSet<String>, FeaturesError> {
    let mut per_label: BTreeMap<DomainLabel, BTreeMap<&str, usize>> = BTreeMap::new();
    for r in records {
        let label = r.label.ok_or(FeaturesError::Unlabelled)?;
        let counts = per_label.entry(label).or_default();
        let distinct: BTreeSet<&str> = r.contributor_logins.iter().map(String::as_str).collect();
        for login in distinct {
            *counts.entry(login).or_insert(0) += 1;
        }
    }
    let mut out = BTreeSet::new();
    for counts in per_label.values() {
        let mut ranked: Vec<(&str, usize)> = counts.iter().map(|(l, c)| (*l, *c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out.extend(ranked.into_iter().take(k).map(|(l, _)| l.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::record;
    use crate::corpus::DomainLabel::*;
    use proptest::prelude::*;

    #[test]
    fn licence_present_vs_absent() {
        let mut a = record("a", None);
        a.licence_key = Some("mit".into());
        let b = record("b", None);
        let m = encode_categorical(&[a, b], &[CategoricalSource::Licence]).unwrap();
        assert_eq!(m.n_cols(), 1);
        assert_eq!(m.columns()[0].name, "licence=mit");
        assert_eq!(m.row(0), &[1.0]);
        assert_eq!(m.row(1), &[0.0]);
    }

    #[test]
    fn topic_cardinality() {
        let mut a = record("a", None);
        a.topics = vec!["cli".into(), "rust".into()];
        let mut b = record("b", None);
        b.topics = vec!["rust".into(), "web".into()];
        let m = encode_categorical(&[a, b], &[CategoricalSource::Topics]).unwrap();
        assert_eq!(m.n_cols(), 3);
    }

    #[test]
    fn languages_by_presence() {
        let mut a = record("a", None);
        a.languages.insert("JavaScript".into(), 90_000);
        a.languages.insert("CSS".into(), 100);
        let mut b = record("b", None);
        b.languages.insert("Rust".into(), 5);
        let m = encode_categorical(&[a, b], &[CategoricalSource::Languages]).unwrap();
        let names: Vec<_> = m.columns().iter().map(|c| c.name.clone()).collect();
        assert_eq!(names, vec!["languages=CSS", "languages=JavaScript", "languages=Rust"]);
        assert_eq!(m.row(0), &[1.0, 1.0, 0.0]);
    }

    fn with_logins(name: &str, label: DomainLabel, logins: &[&str]) -> RepoRecord {
        let mut r = record(name, Some(label));
        r.contributor_logins = logins.iter().map(|s| s.to_string()).collect();
        r
    }

    #[test]
    fn top_contributors_per_label() {
        let recs = vec![
            with_logins("a", Documentation, &["x", "q"]),
            with_logins("b", Documentation, &["x"]),
            with_logins("c", SoftwareTools, &["y", "z"]),
            with_logins("d", SoftwareTools, &["y"]),
        ];
        let top = top_contributors(&recs, 1).unwrap();
        assert_eq!(top, BTreeSet::from(["x".to_string(), "y".to_string()]));
        let all = top_contributors(&recs, 100).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn top_contributors_tie_break_is_lexicographic() {
        let recs = vec![with_logins("a", Documentation, &["m", "b", "k"])];
        assert_eq!(top_contributors(&recs, 2).unwrap(), BTreeSet::from(["b".to_string(), "k".to_string()]));
    }

    #[test]
    fn top_contributors_bound() {
        let labels = DomainLabel::MERGED;
        let recs: Vec<_> = (0..5 * 60)
            .map(|i| {
                let logins: Vec<String> = (0..3).map(|j| format!("u{}", (i * 3 + j) % 400)).collect();
                let refs: Vec<&str> = logins.iter().map(String::as_str).collect();
                with_logins(&format!("r{i}"), labels[i % 5], &refs)
            })
            .collect();
        assert!(top_contributors(&recs, 50).unwrap().len() <= 250);
    }

    #[test]
    fn contributor_filter_limits_columns() {
        let recs = vec![with_logins("a", Documentation, &["x", "q"])];
        let keep = BTreeSet::from(["x".to_string()]);
        let enc = CategoricalEncoder::fit(&recs, &[CategoricalSource::Contributors], Some(&keep)).unwrap();
        assert_eq!(enc.columns().len(), 1);
    }

    proptest! {
        #[test]
        fn row_sums_match_value_sets(topic_sets in prop::collection::vec(prop::collection::btree_set("[a-f]", 0..4), 1..8)) {
            let recs: Vec<_> = topic_sets.iter().enumerate().map(|(i, s)| {
                let mut r = record(&format!("r{i}"), None);
                r.topics = s.iter().cloned().collect();
                r
            }).collect();
            let m = encode_categorical(&recs, &[CategoricalSource::Topics]).unwrap();
            for (i, s) in topic_sets.iter().enumerate() {
                prop_assert!(m.row(i).iter().all(|&v| v == 0.0 || v == 1.0));
                prop_assert_eq!(m.row(i).iter().sum::<f64>() as usize, s.len());
            }
        }
    }
}
