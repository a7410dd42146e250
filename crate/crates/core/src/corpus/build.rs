use std::collections::BTreeMap;
use std::path::Path;

use super::{mark_deprecated, CorpusError, Dataset, DeprecationLexicon, DomainLabel, RepoRecord, RepoStatus};
use crate::ingest::{Cache, RepoRef};

/// Reads a `ref,label` CSV (header required). Later rows for the same
/// repository override earlier ones.
pub fn read_label_file(path: &Path) -> Result<BTreeMap<RepoRef, DomainLabel>, CorpusError> {
    let err = |detail: String| CorpusError::LabelFile {
        path: path.display().to_string(),
        detail,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| err(format!("missing `{name}` column")))
    };
    let (ref_col, label_col) = (col("ref")?, col("label")?);
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let line = i + 2;
        let repo: RepoRef = rec
            .get(ref_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| err(format!("line {line}: {e}")))?;
        let label: DomainLabel = rec
            .get(label_col)
            .unwrap_or("")
            .parse()
            .map_err(|e| err(format!("line {line}: {e}")))?;
        out.insert(repo, label);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub dataset: Dataset,
    /// Labelled repositories with nothing in the cache.
    pub missing: Vec<RepoRef>,
    /// Records flagged by the deprecation lexicon, for manual review.
    pub deprecated: Vec<RepoRef>,
}

/// Turns cached raw repositories into records, sorted by reference.
///
/// With `labels`, only the listed repositories are included; otherwise every
/// cached repository is, unlabelled. Repositories marked gone become
/// placeholder records with status `gone`.
pub fn build_dataset(
    cache: &Cache,
    labels: Option<&BTreeMap<RepoRef, DomainLabel>>,
    lexicon: &DeprecationLexicon,
) -> Result<BuildReport, CorpusError> {
    let repos: Vec<RepoRef> = match labels {
        Some(l) => l.keys().cloned().collect(),
        None => cache.entries()?.into_iter().map(|e| e.repo).collect(),
    };
    let mut records = Vec::new();
    let mut missing = Vec::new();
    let mut deprecated = Vec::new();
    for repo in repos {
        let label = labels.and_then(|l| l.get(&repo).copied());
        if let Some(raw) = cache.get_repo(&repo)? {
            let rec = mark_deprecated(&RepoRecord::from_raw(&raw, label), lexicon);
            if rec.status == RepoStatus::Deprecated {
                deprecated.push(repo);
            }
            records.push(rec);
        } else if cache.get_gone(&repo)?.is_some() {
            records.push(RepoRecord::gone(repo, label));
        } else {
            missing.push(repo);
        }
    }
    Ok(BuildReport {
        dataset: Dataset::new(records),
        missing,
        deprecated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{GoneMarker, RawRepo};
    use chrono::Utc;

    #[test]
    fn builds_from_cache_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().join("cache"));
        let mut live = RawRepo::empty("o/live".parse().unwrap());
        live.readme = Some("# Fast *web* framework".into());
        cache.put_repo(&live).unwrap();
        let mut old = RawRepo::empty("o/old".parse().unwrap());
        old.description = Some("DEPRECATED, use v2".into());
        cache.put_repo(&old).unwrap();
        cache
            .mark_gone(&GoneMarker {
                repo: "o/dead".parse().unwrap(),
                checked_at: Utc::now(),
            })
            .unwrap();

        let labels_path = dir.path().join("labels.csv");
        std::fs::write(
            &labels_path,
            "ref,label\no/live,Web Libraries and Frameworks\no/old,documentation\no/dead,software_tools\no/absent,documentation\n",
        )
        .unwrap();
        let labels = read_label_file(&labels_path).unwrap();
        let r = build_dataset(&cache, Some(&labels), &DeprecationLexicon::default()).unwrap();
        let refs: Vec<String> = r.dataset.records.iter().map(|r| r.repo.to_string()).collect();
        assert_eq!(refs, vec!["o/dead", "o/live", "o/old"]);
        assert_eq!(r.missing, vec!["o/absent".parse::<RepoRef>().unwrap()]);
        assert_eq!(r.deprecated, vec!["o/old".parse::<RepoRef>().unwrap()]);
        assert_eq!(r.dataset.records[0].status, RepoStatus::Gone);
        assert_eq!(r.dataset.records[1].cleaned_readme, "Fast web framework");
        assert_eq!(r.dataset.trainable().len(), 1);

        let unlabelled = build_dataset(&cache, None, &DeprecationLexicon::default()).unwrap();
        assert_eq!(unlabelled.dataset.len(), 3);
        assert!(unlabelled.dataset.records.iter().all(|r| r.label.is_none()));
    }

    #[test]
    fn label_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        std::fs::write(&p, "ref,label\no/x,not-a-domain\n").unwrap();
        assert!(matches!(read_label_file(&p), Err(CorpusError::LabelFile { .. })));
        std::fs::write(&p, "repo,domain\n").unwrap();
        assert!(matches!(read_label_file(&p), Err(CorpusError::LabelFile { .. })));
    }
}
