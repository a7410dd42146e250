use std::collections::BTreeMap;

use serde::Serialize;

use super::{Dataset, DomainLabel, RepoRecord};

/// `part / whole * 100`, or 0 for an empty whole.
pub fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 * 100.0 / whole as f64
    }
}

/// Rounds half away from zero to `decimals` places.
pub fn round_to(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureMissing {
    pub feature: &'static str,
    pub present: usize,
    pub missing: usize,
    pub missing_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSummary {
    pub label: DomainLabel,
    pub count: usize,
    pub percent: f64,
    pub avg_languages: f64,
    pub avg_topics: f64,
    pub avg_root_entries: f64,
    pub avg_contributors: f64,
}

/// Missing-value and per-label summaries of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub size: usize,
    pub features: Vec<FeatureMissing>,
    pub labels: Vec<LabelSummary>,
    pub unlabelled: usize,
}

impl DatasetStats {
    pub fn feature(&self, name: &str) -> Option<&FeatureMissing> {
        self.features.iter().find(|f| f.feature == name)
    }

    pub fn label(&self, label: DomainLabel) -> Option<&LabelSummary> {
        self.labels.iter().find(|l| l.label == label)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} records\n\n{:<24}{:>8}{:>9}{:>8}\n", self.size, "Data source", "Values", "Missing", "(%)");
        for f in &self.features {
            out.push_str(&format!(
                "{:<24}{:>8}{:>9}{:>8.1}\n",
                f.feature, f.present, f.missing, f.missing_percent
            ));
        }
        out.push_str(&format!(
            "\n{:<32}{:>7}{:>6}{:>7}{:>8}{:>8}{:>8}\n",
            "Domain", "Count", "%", "Langs", "Topics", "Root", "Contrib"
        ));
        for l in &self.labels {
            out.push_str(&format!(
                "{:<32}{:>7}{:>6.0}{:>7.1}{:>8.1}{:>8.1}{:>8.1}\n",
                l.label.display_name(),
                l.count,
                l.percent,
                l.avg_languages,
                l.avg_topics,
                l.avg_root_entries,
                l.avg_contributors
            ));
        }
        out
    }
}

type Presence = fn(&RepoRecord) -> bool;

const FEATURES: [(&str, Presence); 11] = [
    ("description", |r| r.description.is_some()),
    ("readme", |r| !r.cleaned_readme.is_empty()),
    ("topics", |r| !r.topics.is_empty()),
    ("licence", |r| r.licence_key.is_some()),
    ("languages", |r| !r.languages.is_empty()),
    ("labels", |r| !r.labels.is_empty()),
    ("contributors", |r| !r.contributor_logins.is_empty()),
    ("root_entries", |r| !r.root_entries.is_empty()),
    ("releases", |_| true),
    ("stars", |_| true),
    ("forks", |_| true),
];

/// Counts missing values per feature and summarises each label.
///
/// A list-valued feature is missing when the list is empty; licence and
/// description are missing when absent. Counts are always present.
pub fn dataset_stats(dataset: &Dataset) -> DatasetStats {
    let size = dataset.len();
    let features = FEATURES
        .iter()
        .map(|(name, present)| {
            let p = dataset.records.iter().filter(|r| present(r)).count();
            FeatureMissing {
                feature: name,
                present: p,
                missing: size - p,
                missing_percent: percent(size - p, size),
            }
        })
        .collect();

    let labelled = dataset.records.iter().filter(|r| r.label.is_some()).count();
    let mut per_label: BTreeMap<DomainLabel, Vec<&RepoRecord>> = BTreeMap::new();
    for r in &dataset.records {
        if let Some(l) = r.label {
            per_label.entry(l).or_default().push(r);
        }
    }
    let avg = |rs: &[&RepoRecord], f: fn(&RepoRecord) -> usize| {
        rs.iter().map(|r| f(r)).sum::<usize>() as f64 / rs.len() as f64
    };
    let labels = per_label
        .into_iter()
        .map(|(label, rs)| LabelSummary {
            label,
            count: rs.len(),
            percent: percent(rs.len(), labelled),
            avg_languages: avg(&rs, |r| r.languages.len()),
            avg_topics: avg(&rs, |r| r.topics.len()),
            avg_root_entries: avg(&rs, |r| r.root_entries.len()),
            avg_contributors: avg(&rs, |r| r.contributor_logins.len()),
        })
        .collect();

    DatasetStats {
        size,
        features,
        labels,
        unlabelled: size - labelled,
    }
}
