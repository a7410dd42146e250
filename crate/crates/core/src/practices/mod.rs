//! Per-repository engineering-practice features mined from commit history:
//! refactoring activity, code ownership and workflow automation.

mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DomainLabel;
use crate::ingest::{CommitRecord, RawRepo, RepoRef};

pub use io::{profiles_csv, read_profiles, write_profiles, PROFILE_COLUMNS};

#[derive(Debug, Error)]
pub enum PracticesError {
    #[error("profiles file {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PracticesError {
    pub fn code(&self) -> &'static str {
        match self {
            PracticesError::Parse { .. } => "E-PRACTICES-PARSE",
            PracticesError::Io { .. } => "E-PRACTICES-IO",
        }
    }
}

/// Keyword stems marking a refactoring commit. Matched as plain substrings
/// of the lower-cased message.
pub const REFACTORING_KEYWORDS: [&str; 13] = [
    "refactor", "restruct", "clean", "not use", "unus", "reformat", "import", "remov", "replac", "split", "reorg",
    "renam", "move",
];

/// Default share of commits at or above which a contributor is major.
pub const MAJOR_THRESHOLD: f64 = 0.05;

/// Repositories with more commits than this are left out of the analysis.
pub const MAX_COMMITS: u64 = 200_000;

pub fn is_refactoring(message: &str) -> bool {
    let lower = message.to_lowercase();
    REFACTORING_KEYWORDS.iter().any(|k| lower.contains(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefactoringStats {
    pub refactoring_commits: u64,
    pub non_refactoring_commits: u64,
    pub total_commits: u64,
    pub refactoring_ratio: f64,
    /// No commits, so the ratio is 0 by convention.
    pub empty: bool,
}

pub fn refactoring_stats(commits: &[CommitRecord]) -> RefactoringStats {
    let refactoring = commits.iter().filter(|c| is_refactoring(&c.message)).count() as u64;
    let total = commits.len() as u64;
    RefactoringStats {
        refactoring_commits: refactoring,
        non_refactoring_commits: total - refactoring,
        total_commits: total,
        refactoring_ratio: if total == 0 { 0.0 } else { refactoring as f64 / total as f64 },
        empty: total == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OwnershipStats {
    pub major_contributors: u64,
    pub minor_contributors: u64,
    pub total_contributors: u64,
    pub ownership_ratio: f64,
    pub threshold: f64,
    /// No commits, so the ratio is 0 by convention.
    pub empty: bool,
}

/// Each author's share of all commits.
pub fn ownership_proportions(commits: &[CommitRecord]) -> BTreeMap<&str, f64> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for c in commits {
        *counts.entry(c.author_id.as_str()).or_insert(0) += 1;
    }
    let total = commits.len() as f64;
    counts.into_iter().map(|(a, n)| (a, n as f64 / total)).collect()
}

/// Counts authors whose commit share is at least `threshold` as major.
pub fn ownership_stats(commits: &[CommitRecord], threshold: f64) -> OwnershipStats {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for c in commits {
        *counts.entry(c.author_id.as_str()).or_insert(0) += 1;
    }
    let total_commits = commits.len() as u64;
    // a correctly rounded quotient lands exactly on the threshold literal at
    // the boundary (e.g. 1/20 == 0.05)
    let major = counts
        .values()
        .filter(|&&n| n as f64 / total_commits as f64 >= threshold)
        .count() as u64;
    let total = counts.len() as u64;
    OwnershipStats {
        major_contributors: major,
        minor_contributors: total - major,
        total_contributors: total,
        ownership_ratio: if total == 0 { 0.0 } else { major as f64 / total as f64 },
        threshold,
        empty: total == 0,
    }
}

/// The nine practice features of one repository.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PracticeProfile {
    pub refactoring_commits: u64,
    pub non_refactoring_commits: u64,
    pub total_commits: u64,
    pub refactoring_ratio: f64,
    pub major_contributors: u64,
    pub minor_contributors: u64,
    pub total_contributors: u64,
    pub ownership_ratio: f64,
    pub uses_automation: bool,
}

impl PracticeProfile {
    pub fn from_parts(refactoring: &RefactoringStats, ownership: &OwnershipStats, uses_automation: bool) -> Self {
        Self {
            refactoring_commits: refactoring.refactoring_commits,
            non_refactoring_commits: refactoring.non_refactoring_commits,
            total_commits: refactoring.total_commits,
            refactoring_ratio: refactoring.refactoring_ratio,
            major_contributors: ownership.major_contributors,
            minor_contributors: ownership.minor_contributors,
            total_contributors: ownership.total_contributors,
            ownership_ratio: ownership.ownership_ratio,
            uses_automation,
        }
    }

    /// The features as nine reals, booleans as 0/1, in declaration order.
    pub fn as_vector(&self) -> [f64; 9] {
        [
            self.refactoring_commits as f64,
            self.non_refactoring_commits as f64,
            self.total_commits as f64,
            self.refactoring_ratio,
            self.major_contributors as f64,
            self.minor_contributors as f64,
            self.total_contributors as f64,
            self.ownership_ratio,
            if self.uses_automation { 1.0 } else { 0.0 },
        ]
    }

    /// Whether either ratio was defaulted because there were no commits.
    pub fn is_empty(&self) -> bool {
        self.total_commits == 0
    }
}

pub fn practice_profile(raw: &RawRepo, commits: &[CommitRecord]) -> PracticeProfile {
    PracticeProfile::from_parts(
        &refactoring_stats(commits),
        &ownership_stats(commits, MAJOR_THRESHOLD),
        raw.has_workflow_files,
    )
}

/// A profile tagged with its repository and (predicted or known) domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainProfile {
    #[serde(rename = "ref")]
    pub repo: RepoRef,
    pub domain: DomainLabel,
    pub profile: PracticeProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion<T> {
    pub kept: Vec<T>,
    pub excluded: Vec<T>,
    pub max_commits: u64,
}

/// Splits off items with strictly more than `max_commits` commits. Order is
/// preserved in both halves.
pub fn exclude_outliers<T>(items: Vec<T>, commits_of: impl Fn(&T) -> u64, max_commits: u64) -> Exclusion<T> {
    let (kept, excluded) = items.into_iter().partition(|t| commits_of(t) <= max_commits);
    Exclusion {
        kept,
        excluded,
        max_commits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn commit(author: &str, message: &str) -> CommitRecord {
        CommitRecord {
            sha: "0".repeat(40),
            author_id: author.to_string(),
            message: message.to_string(),
            authored_at: Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    fn commits(shape: &[(&str, usize)]) -> Vec<CommitRecord> {
        shape.iter()
            .flat_map(|(a, n)| (0..*n).map(move |_| commit(a, "work")))
            .collect()
    }

    #[test]
    fn keyword_examples() {
        assert!(is_refactoring("Refactor parser module"));
        assert!(!is_refactoring("Add login page"));
        assert!(is_refactoring("Cleanup and rename helpers"));
        assert!(is_refactoring("remove unused import"));
        assert!(is_refactoring("do NOT USE this"));
        assert!(is_refactoring("Renamed files"));
    }

    #[test]
    fn refactoring_counts() {
        let empty = refactoring_stats(&[]);
        assert!(empty.empty);
        assert_eq!(empty.refactoring_ratio, 0.0);
        let mut c: Vec<_> = (0..3).map(|_| commit("a", "refactor x")).collect();
        c.extend((0..7).map(|_| commit("a", "feature")));
        let s = refactoring_stats(&c);
        assert_eq!((s.refactoring_commits, s.non_refactoring_commits, s.total_commits), (3, 7, 10));
        assert!((s.refactoring_ratio - 0.3).abs() < 1e-15);
    }

    #[test]
    fn ownership_examples() {
        let s = ownership_stats(&commits(&[("A", 50), ("B", 45), ("C", 5)]), MAJOR_THRESHOLD);
        assert_eq!(s.major_contributors, 3);
        assert_eq!(s.ownership_ratio, 1.0);
        let s = ownership_stats(&commits(&[("A", 96), ("B", 2), ("C", 2)]), MAJOR_THRESHOLD);
        assert_eq!((s.major_contributors, s.minor_contributors), (1, 2));
        assert!((s.ownership_ratio - 1.0 / 3.0).abs() < 1e-15);
        let s = ownership_stats(&commits(&[("A", 4), ("B", 96)]), MAJOR_THRESHOLD);
        assert_eq!((s.major_contributors, s.minor_contributors), (1, 1));
        assert_eq!(s.ownership_ratio, 0.5);
        // 1 of 20 commits is exactly 5%
        let s = ownership_stats(&commits(&[("A", 1), ("B", 19)]), MAJOR_THRESHOLD);
        assert_eq!(s.major_contributors, 2);
        assert!(ownership_stats(&[], MAJOR_THRESHOLD).empty);
    }

    #[test]
    fn profile_matches_parts() {
        let mut c = commits(&[("x", 7)]);
        c.extend((0..3).map(|_| commit("y", "Move files")));
        let mut raw = RawRepo::empty("o/r".parse().unwrap());
        raw.has_workflow_files = true;
        let p = practice_profile(&raw, &c);
        let r = refactoring_stats(&c);
        let o = ownership_stats(&c, MAJOR_THRESHOLD);
        assert_eq!(p, PracticeProfile::from_parts(&r, &o, true));
        assert_eq!(p.major_contributors + p.minor_contributors, p.total_contributors);
        let empty = practice_profile(&raw, &[]);
        assert!(empty.uses_automation && empty.is_empty());
    }

    #[test]
    fn exclusion_is_strict() {
        let items = vec![("a", 5u64), ("b", 200_000), ("c", 200_001)];
        let out = exclude_outliers(items, |t| t.1, MAX_COMMITS);
        assert_eq!(out.kept, vec![("a", 5), ("b", 200_000)]);
        assert_eq!(out.excluded, vec![("c", 200_001)]);
        let n: Vec<u64> = (0..893).map(|i| if i < 4 { 300_000 } else { 10 }).collect();
        assert_eq!(exclude_outliers(n, |v| *v, MAX_COMMITS).kept.len(), 889);
    }

    proptest! {
        #[test]
        fn case_insensitive(m in "[a-zA-Z ]{0,30}") {
            prop_assert_eq!(is_refactoring(&m), is_refactoring(&m.to_lowercase()));
        }

        #[test]
        fn proportions_sum_to_one(authors in prop::collection::vec(0u8..8, 1..60)) {
            let c: Vec<_> = authors.iter().map(|a| commit(&format!("u{a}"), "m")).collect();
            let sum: f64 = ownership_proportions(&c).values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn raising_threshold_never_adds_majors(authors in prop::collection::vec(0u8..12, 1..80), t1 in 0.0f64..0.5, dt in 0.0f64..0.5) {
            let c: Vec<_> = authors.iter().map(|a| commit(&format!("u{a}"), "m")).collect();
            let lo = ownership_stats(&c, t1);
            let hi = ownership_stats(&c, t1 + dt);
            prop_assert!(hi.major_contributors <= lo.major_contributors);
            prop_assert_eq!(lo.major_contributors + lo.minor_contributors, lo.total_contributors);
        }
    }
}
