//! Repository metadata and commit-history ingestion from the GitHub REST API.
//!
//! The [`GithubClient`] speaks to the API through a [`Transport`], so the
//! same request logic (pagination, retries, rate-limit bookkeeping) runs
//! against the live service or an in-memory fixture. Fetched values can be
//! persisted with [`Cache`], which keys entries by repository and resource
//! kind and guards each entry with a SHA-256 sidecar.

mod batch;
mod cache;
mod client;
mod transport;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{fetch_batch, BatchOptions, FetchOutcome};
pub use cache::{Cache, CacheEntry, ResourceKind};
pub use client::{CommitStream, GithubClient, RetryPolicy, TOKEN_ENV_VAR};
pub use transport::{FixtureTransport, HttpResponse, HttpTransport, Transport, TransportFailure};

/// Errors produced while fetching or caching repository data.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid repository reference `{0}`: expected owner/name")]
    InvalidRef(String),
    #[error("repository {0} not found (deleted or renamed)")]
    NotFound(RepoRef),
    #[error("rate limit exhausted until {reset_at}")]
    RateLimited { reset_at: DateTime<Utc> },
    #[error("authentication failed")]
    AuthFailed,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("commit history of {repo} truncated after {fetched} commits: {reason}")]
    TruncatedHistory {
        repo: RepoRef,
        fetched: usize,
        reason: String,
    },
    #[error("unexpected API payload: {0}")]
    Payload(String),
    #[error("cache i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache entry {path} (checksum mismatch); entry evicted")]
    CorruptCache { path: String },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::InvalidRef(_) => "E-INGEST-REF",
            IngestError::NotFound(_) => "E-INGEST-NOTFOUND",
            IngestError::RateLimited { .. } => "E-INGEST-RATELIMIT",
            IngestError::AuthFailed => "E-INGEST-AUTH",
            IngestError::Transport(_) => "E-INGEST-TRANSPORT",
            IngestError::TruncatedHistory { .. } => "E-INGEST-TRUNCATED",
            IngestError::Payload(_) => "E-INGEST-PAYLOAD",
            IngestError::Io { .. } => "E-INGEST-IO",
            IngestError::CorruptCache { .. } => "E-INGEST-CACHE",
        }
    }
}

/// A repository identifier in canonical `owner/name` form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RepoRef {
    owner: String,
    name: String,
}

impl RepoRef {
    pub fn new(owner: &str, name: &str) -> Result<Self, IngestError> {
        let valid = |s: &str| !s.is_empty() && !s.contains('/') && !s.chars().any(char::is_whitespace);
        if !valid(owner) || !valid(name) {
            return Err(IngestError::InvalidRef(format!("{owner}/{name}")));
        }
        Ok(Self {
            owner: owner.to_string(),
            name: name.to_string(),
        })
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Directory name used by the on-disk cache: `owner__name`.
    pub fn cache_key(&self) -> String {
        format!("{}__{}", self.owner, self.name)
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

impl FromStr for RepoRef {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('/') {
            Some((owner, name)) => RepoRef::new(owner, name),
            None => Err(IngestError::InvalidRef(s.to_string())),
        }
    }
}

impl TryFrom<String> for RepoRef {
    type Error = IngestError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<RepoRef> for String {
    fn from(value: RepoRef) -> Self {
        value.to_string()
    }
}

/// A contributor as listed by the contributors endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contributor {
    pub login: String,
    pub commit_count: u64,
}

/// Everything harvested for one repository. Absent optional values stay
/// `None`; they are never coerced to empty strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRepo {
    #[serde(rename = "ref")]
    pub repo: RepoRef,
    pub description: Option<String>,
    pub readme: Option<String>,
    pub topics: Vec<String>,
    pub licence_key: Option<String>,
    pub languages: BTreeMap<String, u64>,
    pub labels: Vec<String>,
    /// Sorted by descending commit count, then login.
    pub contributors: Vec<Contributor>,
    pub root_entries: Vec<String>,
    pub releases: u64,
    pub stars: u64,
    pub forks: u64,
    pub has_workflow_files: bool,
    pub fetched_at: DateTime<Utc>,
}

impl RawRepo {
    /// A repository with no metadata at all, stamped at the Unix epoch.
    pub fn empty(repo: RepoRef) -> Self {
        Self {
            repo,
            description: None,
            readme: None,
            topics: Vec::new(),
            licence_key: None,
            languages: BTreeMap::new(),
            labels: Vec::new(),
            contributors: Vec::new(),
            root_entries: Vec::new(),
            releases: 0,
            stars: 0,
            forks: 0,
            has_workflow_files: false,
            fetched_at: DateTime::<Utc>::UNIX_EPOCH,
        }
    }

    pub fn sort_contributors(&mut self) {
        self.contributors
            .sort_by(|a, b| b.commit_count.cmp(&a.commit_count).then_with(|| a.login.cmp(&b.login)));
    }
}

/// One commit of a repository's default-branch history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitRecord {
    pub sha: String,
    /// API login when known, otherwise a hash of the normalised name and email.
    pub author_id: String,
    pub message: String,
    pub authored_at: DateTime<Utc>,
}

pub fn is_valid_sha(sha: &str) -> bool {
    sha.len() == 40 && sha.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Request allowance reported by the API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateBudget {
    pub remaining: u64,
    pub reset_at: DateTime<Utc>,
    pub max_concurrent: usize,
}

impl RateBudget {
    pub fn unlimited(max_concurrent: usize) -> Self {
        Self {
            remaining: u64::MAX,
            reset_at: DateTime::<Utc>::UNIX_EPOCH,
            max_concurrent: max_concurrent.max(1),
        }
    }

    /// True when a request would exceed the budget at instant `now`.
    pub fn exhausted_at(&self, now: DateTime<Utc>) -> bool {
        self.remaining == 0 && now < self.reset_at
    }
}

/// What happened to one repository during a batch fetch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum FetchStatus {
    Fetched,
    /// The API reports the repository as missing; it is kept on record.
    Gone,
    Failed { code: String, message: String },
}

/// Marker persisted for repositories that no longer exist upstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoneMarker {
    #[serde(rename = "ref")]
    pub repo: RepoRef,
    pub checked_at: DateTime<Utc>,
}
