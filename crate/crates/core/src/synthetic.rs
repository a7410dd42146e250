//! Seeded synthetic repositories for smoke tests and demos.
//!
//! Each repository's label is the domain owning the majority of the marker
//! words planted in its README. Topics, licences, languages, contributors
//! and counts are drawn with little or no relation to the label.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, DomainLabel, RepoRecord};
use crate::ingest::{CommitRecord, Contributor, RawRepo, RepoRef};
use crate::practices::{practice_profile, DomainProfile};

const FILLER: [&str; 40] = [
    "project", "simple", "fast", "small", "open", "source", "install", "usage", "example", "license", "contributing",
    "support", "version", "release", "feature", "easy", "modern", "lightweight", "docs", "quick", "start", "run",
    "config", "setup", "team", "community", "issue", "pull", "request", "welcome", "stable", "api", "code", "test",
    "build", "status", "badge", "latest", "new", "update",
];

const TOPICS: [&str; 12] = [
    "hacktoberfest", "opensource", "python", "javascript", "rust", "go", "java", "linux", "macos", "windows", "android",
    "ios",
];

const LICENCES: [Option<&str>; 4] = [Some("mit"), Some("apache-2.0"), Some("gpl-3.0"), None];
const LANGUAGES: [&str; 8] = ["Python", "JavaScript", "Rust", "Go", "Java", "C", "C++", "TypeScript"];
const ROOT_FILES: [&str; 8] = ["LICENSE", "src", "docs", "tests", "Makefile", ".gitignore", "package.json", "setup.py"];

/// Class sizes of the default 250-record corpus, in [`DomainLabel::MERGED`] order.
pub const DEFAULT_CLASS_SIZES: [usize; 5] = [40, 60, 50, 45, 55];

fn markers(label: DomainLabel) -> &'static [&'static str] {
    match label {
        DomainLabel::ApplicationAndSystemSoftware => &["kernel", "desktop", "emulator", "driver", "gameplay", "editor"],
        DomainLabel::Documentation => &["tutorial", "guide", "handbook", "cheatsheet", "curated", "notes"],
        DomainLabel::NonWebLibsFrameworks => &["tensor", "parser", "numeric", "serialization", "bindings", "sdk"],
        DomainLabel::SoftwareTools => &["cli", "linter", "formatter", "plugin", "terminal", "scaffold"],
        _ => &["http", "router", "middleware", "frontend", "css", "websocket"],
    }
}

fn topic_for(label: DomainLabel) -> &'static str {
    match label {
        DomainLabel::ApplicationAndSystemSoftware => "application",
        DomainLabel::Documentation => "awesome-list",
        DomainLabel::NonWebLibsFrameworks => "library",
        DomainLabel::SoftwareTools => "devtools",
        _ => "web",
    }
}

fn readme(rng: &mut ChaCha8Rng, label: DomainLabel) -> String {
    let mut words: Vec<String> = (0..rng.random_range(15..40))
        .map(|_| FILLER.choose(rng).unwrap().to_string())
        .collect();
    // three own markers, at most one stray marker of another domain
    for _ in 0..3 {
        let w = markers(label).choose(rng).unwrap();
        words.insert(rng.random_range(0..=words.len()), w.to_string());
    }
    if rng.random_bool(0.3) {
        let other = *DomainLabel::MERGED.choose(rng).unwrap();
        let w = markers(other).choose(rng).unwrap();
        words.insert(rng.random_range(0..=words.len()), w.to_string());
    }
    format!("# Project\n\n{}", words.join(" "))
}

/// Raw repositories with their labels. `class_sizes` follows
/// [`DomainLabel::MERGED`] order; records are interleaved by a seeded shuffle.
pub fn synthetic_repos(class_sizes: &[usize; 5], seed: u64) -> Vec<(RawRepo, DomainLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (&label, &n) in DomainLabel::MERGED.iter().zip(class_sizes) {
        for i in 0..n {
            let repo = RepoRef::new("synthetic", &format!("{}-{i:03}", label.slug().replace('_', "-"))).expect("valid ref");
            let mut raw = RawRepo::empty(repo);
            raw.readme = Some(readme(&mut rng, label));
            raw.description = rng
                .random_bool(0.8)
                .then(|| format!("A {} {}", FILLER.choose(&mut rng).unwrap(), FILLER.choose(&mut rng).unwrap()));
            if rng.random_bool(0.5) {
                raw.topics.push(TOPICS.choose(&mut rng).unwrap().to_string());
                if rng.random_bool(0.5) {
                    raw.topics.push(topic_for(label).to_string());
                }
            }
            raw.licence_key = LICENCES.choose(&mut rng).unwrap().map(str::to_string);
            for _ in 0..rng.random_range(1..=3) {
                raw.languages
                    .insert(LANGUAGES.choose(&mut rng).unwrap().to_string(), rng.random_range(100..100_000));
            }
            raw.contributors = (0..rng.random_range(1..6))
                .map(|_| Contributor {
                    login: format!("dev{}", rng.random_range(0..60)),
                    commit_count: rng.random_range(1..200),
                })
                .collect();
            raw.contributors.sort_by(|a, b| a.login.cmp(&b.login));
            raw.contributors.dedup_by(|a, b| a.login == b.login);
            raw.sort_contributors();
            raw.root_entries = std::iter::once("README.md".to_string())
                .chain(ROOT_FILES.iter().filter(|_| rng.random_bool(0.4)).map(|s| s.to_string()))
                .collect();
            raw.stars = rng.random_range(0..50_000);
            raw.forks = raw.stars / rng.random_range(2..20);
            raw.releases = rng.random_range(0..80);
            raw.has_workflow_files = rng.random_bool(0.5);
            out.push((raw, label));
        }
    }
    // deterministic interleave so class blocks do not line up with folds
    let mut order: Vec<usize> = (0..out.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    order.into_iter().map(|i| out[i].clone()).collect()
}

/// The labelled 250-record corpus used by the end-to-end checks.
pub fn synthetic_corpus(seed: u64) -> Dataset {
    Dataset::new(
        synthetic_repos(&DEFAULT_CLASS_SIZES, seed)
            .iter()
            .map(|(raw, label)| RepoRecord::from_raw(raw, Some(*label)))
            .collect(),
    )
}

/// A commit history where `refactor_share` of the messages are refactorings
/// and authorship is skewed towards the first few developers.
pub fn synthetic_commits(rng: &mut ChaCha8Rng, n: usize, refactor_share: f64) -> Vec<CommitRecord> {
    let epoch = chrono::DateTime::<chrono::Utc>::UNIX_EPOCH;
    (0..n)
        .map(|i| {
            let message = if rng.random_bool(refactor_share) {
                "Refactor module layout"
            } else {
                "Add feature"
            };
            let author = (rng.random_range(0.0f64..1.0).powi(3) * 12.0) as usize;
            CommitRecord {
                sha: format!("{:040x}", rng.random::<u128>()),
                author_id: format!("dev{author}"),
                message: message.to_string(),
                authored_at: epoch + chrono::Duration::minutes(i as i64),
            }
        })
        .collect()
}

/// Practice profiles whose automation adoption depends on the domain.
pub fn synthetic_profiles(per_domain: usize, seed: u64) -> Vec<DomainProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adoption: BTreeMap<DomainLabel, f64> = DomainLabel::MERGED.into_iter().zip([0.7, 0.3, 0.55, 0.65, 0.6]).collect();
    let mut out = Vec::new();
    for (&domain, &p) in &adoption {
        for i in 0..per_domain {
            let mut raw = RawRepo::empty(
                RepoRef::new("synthetic", &format!("{}-{i:03}", domain.slug().replace('_', "-"))).expect("valid ref"),
            );
            raw.has_workflow_files = rng.random_bool(p);
            let n = rng.random_range(5..120);
            let commits = synthetic_commits(&mut rng, n, if domain == DomainLabel::Documentation { 0.06 } else { 0.12 });
            out.push(DomainProfile {
                repo: raw.repo.clone(),
                domain,
                profile: practice_profile(&raw, &commits),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_is_the_majority_marker_domain() {
        let ds = synthetic_corpus(3);
        assert_eq!(ds.len(), 250);
        assert_eq!(ds.class_counts().len(), 5);
        for r in &ds.records {
            let mut votes: BTreeMap<DomainLabel, usize> = BTreeMap::new();
            for w in r.cleaned_readme.split_whitespace() {
                for d in DomainLabel::MERGED {
                    if markers(d).contains(&w) {
                        *votes.entry(d).or_default() += 1;
                    }
                }
            }
            let best = votes.iter().max_by_key(|(_, &v)| v).map(|(d, _)| *d);
            assert_eq!(best, r.label, "{}", r.cleaned_readme);
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthetic_corpus(9), synthetic_corpus(9));
        assert_ne!(synthetic_corpus(9), synthetic_corpus(10));
        assert_eq!(synthetic_profiles(5, 1), synthetic_profiles(5, 1));
    }
}
