use chrono::Utc;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Cache, FetchStatus, GithubClient, GoneMarker, IngestError, RepoRef, ResourceKind, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Worker threads; the client's own permit count still caps requests.
    pub jobs: usize,
    /// Refetch even when the cache already holds the resource.
    pub refresh: bool,
    pub commits: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            jobs: 4,
            refresh: false,
            commits: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchOutcome {
    #[serde(rename = "ref")]
    pub repo: RepoRef,
    #[serde(flatten)]
    pub status: FetchStatus,
}

fn fetch_one<T: Transport>(client: &GithubClient<T>, cache: &Cache, repo: &RepoRef, opts: BatchOptions) -> FetchStatus {
    if !opts.refresh && matches!(cache.get_gone(repo), Ok(Some(_))) {
        return FetchStatus::Gone;
    }
    let result = cache
        .get_or_fetch(repo, ResourceKind::Repo, opts.refresh, || client.fetch_repo(repo))
        .and_then(|_| {
            if opts.commits {
                cache
                    .get_or_fetch(repo, ResourceKind::Commits, opts.refresh, || client.fetch_all_commits(repo))
                    .map(|_| ())
            } else {
                Ok(())
            }
        });
    match result {
        Ok(()) => FetchStatus::Fetched,
        Err(IngestError::NotFound(_)) => {
            let marker = GoneMarker {
                repo: repo.clone(),
                checked_at: Utc::now(),
            };
            match cache.mark_gone(&marker) {
                Ok(()) => FetchStatus::Gone,
                Err(e) => failed(&e),
            }
        }
        Err(e) => failed(&e),
    }
}

fn failed(e: &IngestError) -> FetchStatus {
    FetchStatus::Failed {
        code: e.code().to_string(),
        message: e.to_string(),
    }
}

/// Fetches every repository into the cache on up to `opts.jobs` threads.
/// Failures are reported per repository and never abort the batch; the
/// outcomes come back in input order.
pub fn fetch_batch<T: Transport>(
    client: &GithubClient<T>,
    cache: &Cache,
    repos: &[RepoRef],
    opts: BatchOptions,
) -> Vec<FetchOutcome> {
    let run = || {
        repos
            .par_iter()
            .map(|repo| FetchOutcome {
                repo: repo.clone(),
                status: fetch_one(client, cache, repo, opts),
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("could not start {} workers ({e}); using the global pool", opts.jobs);
            run()
        }
    }
}
