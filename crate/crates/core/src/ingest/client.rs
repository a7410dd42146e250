use std::collections::{HashSet, VecDeque};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use chrono::{DateTime, TimeZone, Utc};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::transport::{HttpResponse, Transport};
use super::{is_valid_sha, CommitRecord, Contributor, IngestError, RateBudget, RawRepo, RepoRef};

/// Environment variable holding the API token.
pub const TOKEN_ENV_VAR: &str = "REPODOMAIN_GITHUB_TOKEN";

const DEFAULT_BASE_URL: &str = "https://api.github.com";
const PER_PAGE: u32 = 100;

/// Retry and wait limits for API calls.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    /// Retries after the first attempt on transient failures (transport errors, 5xx).
    pub max_retries: u32,
    /// Backoff before retry `i` is `base_delay * 2^i`.
    pub base_delay: Duration,
    /// Longest the client will sleep for a rate-limit reset before giving up
    /// with [`IngestError::RateLimited`].
    pub max_rate_wait: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_rate_wait: Duration::from_secs(3600),
        }
    }
}

struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// GitHub REST v3 client with pagination, retries and rate-limit compliance.
pub struct GithubClient<T: Transport> {
    transport: T,
    base_url: String,
    token: Option<String>,
    budget: Mutex<RateBudget>,
    permits: Permits,
    retry: RetryPolicy,
    sleeper: Sleeper,
}

impl<T: Transport> GithubClient<T> {
    pub fn new(transport: T, token: Option<String>) -> Self {
        let budget = RateBudget::unlimited(4);
        let permits = Permits {
            available: Mutex::new(budget.max_concurrent),
            freed: Condvar::new(),
        };
        Self {
            transport,
            base_url: DEFAULT_BASE_URL.to_string(),
            token,
            budget: Mutex::new(budget),
            permits,
            retry: RetryPolicy::default(),
            sleeper: Box::new(std::thread::sleep),
        }
    }

    /// Reads the token from [`TOKEN_ENV_VAR`] when present.
    pub fn from_env(transport: T) -> Self {
        let token = std::env::var(TOKEN_ENV_VAR).ok().filter(|t| !t.trim().is_empty());
        Self::new(transport, token)
    }

    pub fn with_base_url(mut self, base_url: &str) -> Self {
        self.base_url = base_url.trim_end_matches('/').to_string();
        self
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_concurrent(mut self, max_concurrent: usize) -> Self {
        let n = max_concurrent.max(1);
        self.budget.get_mut().unwrap().max_concurrent = n;
        self.permits = Permits {
            available: Mutex::new(n),
            freed: Condvar::new(),
        };
        self
    }

    pub fn with_budget(self, remaining: u64, reset_at: DateTime<Utc>) -> Self {
        {
            let mut b = self.budget.lock().unwrap();
            b.remaining = remaining;
            b.reset_at = reset_at;
        }
        self
    }

    /// Replaces `std::thread::sleep`; used by tests to observe waits.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn budget(&self) -> RateBudget {
        self.budget.lock().unwrap().clone()
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    fn repo_url(&self, repo: &RepoRef, suffix: &str) -> String {
        format!("{}/repos/{}/{}{}", self.base_url, repo.owner(), repo.name(), suffix)
    }

    /// Blocks until the budget allows a request, then reserves one unit.
    fn reserve(&self) -> Result<(), IngestError> {
        loop {
            let wait = {
                let mut b = self.budget.lock().unwrap();
                let now = Utc::now();
                if !b.exhausted_at(now) {
                    b.remaining = b.remaining.saturating_sub(1);
                    return Ok(());
                }
                let wait = (b.reset_at - now).to_std().unwrap_or_default();
                if wait > self.retry.max_rate_wait {
                    return Err(IngestError::RateLimited { reset_at: b.reset_at });
                }
                wait
            };
            log::info!("rate limit exhausted; sleeping {:?}", wait);
            (self.sleeper)(wait + Duration::from_millis(50));
            // After the reset instant a request is allowed again; its
            // response headers restore the real allowance.
            let mut b = self.budget.lock().unwrap();
            if Utc::now() >= b.reset_at && b.remaining == 0 {
                b.remaining = 1;
            }
        }
    }

    fn update_budget(&self, resp: &HttpResponse) {
        let mut b = self.budget.lock().unwrap();
        if let Some(rem) = resp.header("x-ratelimit-remaining").and_then(|v| v.trim().parse::<u64>().ok()) {
            b.remaining = rem;
        }
        if let Some(reset) = resp.header("x-ratelimit-reset").and_then(|v| v.trim().parse::<i64>().ok()) {
            if let Some(t) = Utc.timestamp_opt(reset, 0).single() {
                b.reset_at = t;
            }
        }
    }

    fn is_rate_limited(resp: &HttpResponse) -> bool {
        resp.status == 429
            || (resp.status == 403
                && (resp.header("x-ratelimit-remaining") == Some("0")
                    || resp.header("retry-after").is_some()
                    || resp.body.to_ascii_lowercase().contains("rate limit")))
    }

    /// GET with retries. Non-success statuses other than auth, rate-limit and
    /// server errors are returned to the caller for interpretation.
    pub fn get(&self, url: &str) -> Result<HttpResponse, IngestError> {
        let _permit = self.permits.acquire();
        let mut transient = 0u32;
        let mut rate_waits = 0u32;
        loop {
            self.reserve()?;
            let outcome = self.transport.get(url, self.token.as_deref());
            let resp = match outcome {
                Ok(resp) => resp,
                Err(failure) => {
                    if transient < self.retry.max_retries {
                        (self.sleeper)(self.retry.base_delay * 2u32.pow(transient));
                        transient += 1;
                        continue;
                    }
                    return Err(IngestError::Transport(failure.0));
                }
            };
            self.update_budget(&resp);
            if Self::is_rate_limited(&resp) {
                let mut b = self.budget.lock().unwrap();
                b.remaining = 0;
                if let Some(secs) = resp.header("retry-after").and_then(|v| v.trim().parse::<i64>().ok()) {
                    b.reset_at = b.reset_at.max(Utc::now() + chrono::Duration::seconds(secs));
                }
                let reset_at = b.reset_at;
                drop(b);
                if rate_waits >= self.retry.max_retries {
                    return Err(IngestError::RateLimited { reset_at });
                }
                rate_waits += 1;
                continue;
            }
            match resp.status {
                401 | 403 => return Err(IngestError::AuthFailed),
                500..=599 => {
                    if transient < self.retry.max_retries {
                        (self.sleeper)(self.retry.base_delay * 2u32.pow(transient));
                        transient += 1;
                        continue;
                    }
                    return Err(IngestError::Transport(format!("HTTP {} from {url}", resp.status)));
                }
                _ => return Ok(resp),
            }
        }
    }

    fn get_json(&self, url: &str) -> Result<Option<Value>, IngestError> {
        let resp = self.get(url)?;
        match resp.status {
            200..=299 if resp.status != 204 => serde_json::from_str(&resp.body)
                .map(Some)
                .map_err(|e| IngestError::Payload(format!("{url}: {e}"))),
            204 | 404 | 409 | 410 => Ok(None),
            301 | 302 | 307 | 308 => Ok(None),
            s => Err(IngestError::Transport(format!("unexpected HTTP {s} from {url}"))),
        }
    }

    /// Fetches every page of a list endpoint. Missing resources yield an empty list.
    fn get_all_pages(&self, first_url: &str) -> Result<Vec<Value>, IngestError> {
        let mut out = Vec::new();
        let mut next = Some(first_url.to_string());
        while let Some(url) = next.take() {
            let resp = self.get(&url)?;
            match resp.status {
                200 => {}
                204 | 404 | 409 => break,
                s => return Err(IngestError::Transport(format!("unexpected HTTP {s} from {url}"))),
            }
            let page: Value =
                serde_json::from_str(&resp.body).map_err(|e| IngestError::Payload(format!("{url}: {e}")))?;
            match page {
                Value::Array(items) => out.extend(items),
                _ => return Err(IngestError::Payload(format!("{url}: expected a JSON array"))),
            }
            next = resp.header("link").and_then(next_link);
        }
        Ok(out)
    }

    /// Harvests all metadata of one repository.
    pub fn fetch_repo(&self, repo: &RepoRef) -> Result<RawRepo, IngestError> {
        let meta = match self.get_json(&self.repo_url(repo, ""))? {
            Some(v) => v,
            None => return Err(IngestError::NotFound(repo.clone())),
        };
        let description = meta
            .get("description")
            .and_then(Value::as_str)
            .filter(|s| !s.trim().is_empty())
            .map(str::to_string);
        let licence_key = meta
            .get("license")
            .and_then(|l| l.get("key"))
            .and_then(Value::as_str)
            .map(str::to_string);
        let stars = meta.get("stargazers_count").and_then(Value::as_u64).unwrap_or(0);
        let forks = meta.get("forks_count").and_then(Value::as_u64).unwrap_or(0);

        let readme = match self.get_json(&self.repo_url(repo, "/readme"))? {
            Some(v) => decode_readme(&v)?,
            None => None,
        };

        let topics = self
            .get_json(&self.repo_url(repo, "/topics"))?
            .and_then(|v| v.get("names").cloned())
            .and_then(|v| v.as_array().cloned())
            .unwrap_or_default()
            .into_iter()
            .filter_map(|t| t.as_str().map(str::to_string))
            .collect();

        let languages = self
            .get_json(&self.repo_url(repo, "/languages"))?
            .and_then(|v| v.as_object().cloned())
            .unwrap_or_default()
            .into_iter()
            .map(|(k, v)| (k, v.as_u64().unwrap_or(0)))
            .collect();

        let labels = self
            .get_all_pages(&self.repo_url(repo, &format!("/labels?per_page={PER_PAGE}")))?
            .into_iter()
            .filter_map(|l| l.get("name").and_then(Value::as_str).map(str::to_string))
            .collect();

        let contributors = self
            .get_all_pages(&self.repo_url(repo, &format!("/contributors?per_page={PER_PAGE}")))?
            .into_iter()
            .filter_map(|c| {
                Some(Contributor {
                    login: c.get("login")?.as_str()?.to_string(),
                    commit_count: c.get("contributions").and_then(Value::as_u64).unwrap_or(0),
                })
            })
            .collect();

        let root_entries = match self.get_json(&self.repo_url(repo, "/contents/"))? {
            Some(Value::Array(items)) => items
                .iter()
                .filter_map(|e| e.get("name").and_then(Value::as_str).map(str::to_string))
                .collect(),
            _ => Vec::new(),
        };

        let has_workflow_files = match self.get_json(&self.repo_url(repo, "/contents/.github/workflows"))? {
            Some(Value::Array(items)) => items
                .iter()
                .any(|e| e.get("type").and_then(Value::as_str) == Some("file")),
            _ => false,
        };

        let releases = self
            .get_all_pages(&self.repo_url(repo, &format!("/releases?per_page={PER_PAGE}")))?
            .len() as u64;

        let mut raw = RawRepo {
            repo: repo.clone(),
            description,
            readme,
            topics,
            licence_key,
            languages,
            labels,
            contributors,
            root_entries,
            releases,
            stars,
            forks,
            has_workflow_files,
            fetched_at: Utc::now(),
        };
        raw.sort_contributors();
        Ok(raw)
    }

    /// Streams the default-branch history, newest first, de-duplicated by sha.
    pub fn fetch_commits(&self, repo: &RepoRef) -> CommitStream<'_, T> {
        CommitStream {
            client: self,
            repo: repo.clone(),
            next_url: Some(self.repo_url(repo, &format!("/commits?per_page={PER_PAGE}"))),
            buffer: VecDeque::new(),
            seen: HashSet::new(),
            pages: 0,
            yielded: 0,
            done: false,
        }
    }

    /// Collects the whole commit stream, failing on any error.
    pub fn fetch_all_commits(&self, repo: &RepoRef) -> Result<Vec<CommitRecord>, IngestError> {
        self.fetch_commits(repo).collect()
    }
}

/// Lazily paginated commit history.
pub struct CommitStream<'a, T: Transport> {
    client: &'a GithubClient<T>,
    repo: RepoRef,
    next_url: Option<String>,
    buffer: VecDeque<CommitRecord>,
    seen: HashSet<String>,
    pages: usize,
    yielded: usize,
    done: bool,
}

impl<T: Transport> CommitStream<'_, T> {
    fn truncated(&mut self, reason: String) -> IngestError {
        self.done = true;
        IngestError::TruncatedHistory {
            repo: self.repo.clone(),
            fetched: self.yielded,
            reason,
        }
    }

    fn load_page(&mut self, url: &str) -> Result<(), IngestError> {
        let first = self.pages == 0;
        let resp = match self.client.get(url) {
            Ok(r) => r,
            Err(e) if first => {
                self.done = true;
                return Err(e);
            }
            Err(e) => return Err(self.truncated(e.to_string())),
        };
        match resp.status {
            200 => {}
            // 409: empty repository
            409 | 204 => {
                self.next_url = None;
                return Ok(());
            }
            404 if first => {
                self.done = true;
                return Err(IngestError::NotFound(self.repo.clone()));
            }
            s => return Err(self.truncated(format!("HTTP {s} from {url}"))),
        }
        let page: Value = match serde_json::from_str(&resp.body) {
            Ok(v) => v,
            Err(e) => return Err(self.truncated(format!("malformed page {url}: {e}"))),
        };
        let Value::Array(items) = page else {
            return Err(self.truncated(format!("page {url} is not a JSON array")));
        };
        for item in &items {
            match parse_commit(item) {
                Ok(c) => {
                    if self.seen.insert(c.sha.clone()) {
                        self.buffer.push_back(c);
                    }
                }
                Err(e) => log::warn!("{}: skipping commit entry: {e}", self.repo),
            }
        }
        self.pages += 1;
        self.next_url = resp.header("link").and_then(next_link);
        Ok(())
    }
}

impl<T: Transport> Iterator for CommitStream<'_, T> {
    type Item = Result<CommitRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(c) = self.buffer.pop_front() {
                self.yielded += 1;
                return Some(Ok(c));
            }
            if self.done {
                return None;
            }
            let Some(url) = self.next_url.take() else {
                self.done = true;
                return None;
            };
            if let Err(e) = self.load_page(&url) {
                return Some(Err(e));
            }
        }
    }
}

/// Extracts the `rel="next"` target of a `Link` header.
pub(crate) fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| p.trim().replace(' ', "") == "rel=\"next\"");
        if is_next && target.starts_with('<') && target.ends_with('>') {
            Some(target[1..target.len() - 1].to_string())
        } else {
            None
        }
    })
}

fn decode_readme(v: &Value) -> Result<Option<String>, IngestError> {
    let Some(content) = v.get("content").and_then(Value::as_str) else {
        return Ok(None);
    };
    let encoding = v.get("encoding").and_then(Value::as_str).unwrap_or("base64");
    if encoding != "base64" {
        return Ok(Some(content.to_string()));
    }
    let compact: String = content.chars().filter(|c| !c.is_whitespace()).collect();
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(compact.as_bytes())
        .map_err(|e| IngestError::Payload(format!("readme content: {e}")))?;
    Ok(Some(String::from_utf8_lossy(&bytes).into_owned()))
}

/// Identity for commit authors without an API login: a hash of the
/// trimmed, lower-cased name and email.
pub(crate) fn anonymous_author_id(name: &str, email: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(name.trim().to_lowercase().as_bytes());
    hasher.update(b"\n");
    hasher.update(email.trim().to_lowercase().as_bytes());
    let digest = hex::encode(hasher.finalize());
    format!("anon:{}", &digest[..16])
}

fn parse_commit(item: &Value) -> Result<CommitRecord, String> {
    let sha = item.get("sha").and_then(Value::as_str).ok_or("missing sha")?;
    if !is_valid_sha(sha) {
        return Err(format!("invalid sha `{sha}`"));
    }
    let commit = item.get("commit").ok_or("missing commit object")?;
    let git_author = commit.get("author");
    let login = item
        .get("author")
        .and_then(|a| a.get("login"))
        .and_then(Value::as_str)
        .filter(|l| !l.is_empty());
    let author_id = match login {
        Some(l) => l.to_string(),
        None => {
            let name = git_author.and_then(|a| a.get("name")).and_then(Value::as_str).unwrap_or("");
            let email = git_author.and_then(|a| a.get("email")).and_then(Value::as_str).unwrap_or("");
            anonymous_author_id(name, email)
        }
    };
    let date = git_author
        .and_then(|a| a.get("date"))
        .and_then(Value::as_str)
        .ok_or("missing author date")?;
    let authored_at = DateTime::parse_from_rfc3339(date)
        .map_err(|e| format!("bad date `{date}`: {e}"))?
        .with_timezone(&Utc);
    let message = commit.get("message").and_then(Value::as_str).unwrap_or("").to_string();
    Ok(CommitRecord {
        sha: sha.to_ascii_lowercase(),
        author_id,
        message,
        authored_at,
    })
}

#[cfg(test)]
mod tests {
    use super::super::transport::FixtureTransport;
    use super::*;
    use serde_json::json;

    const BASE: &str = "http://fixture";

    fn client(t: FixtureTransport) -> GithubClient<FixtureTransport> {
        GithubClient::new(t, None)
            .with_base_url(BASE)
            .with_retry_policy(RetryPolicy {
                max_retries: 3,
                base_delay: Duration::ZERO,
                max_rate_wait: Duration::from_secs(1),
            })
            .with_sleeper(|_| {})
    }

    fn commit_json(sha: &str, login: Option<&str>, msg: &str) -> Value {
        json!({
            "sha": sha,
            "author": login.map(|l| json!({"login": l})),
            "commit": {
                "message": msg,
                "author": {"name": "Jane Doe", "email": "JANE@example.com", "date": "2022-03-21T10:00:00Z"}
            }
        })
    }

    fn sha(i: u32) -> String {
        format!("{:040x}", i)
    }

    #[test]
    fn link_header_next_extraction() {
        let h = r#"<https://api.github.com/x?page=2>; rel="next", <https://api.github.com/x?page=5>; rel="last""#;
        assert_eq!(next_link(h).as_deref(), Some("https://api.github.com/x?page=2"));
        assert_eq!(next_link(r#"<https://a/x?page=1>; rel="prev""#), None);
    }

    #[test]
    fn commits_paginate_and_deduplicate() {
        let t = FixtureTransport::new();
        let p1 = json!([commit_json(&sha(1), Some("a"), "one"), commit_json(&sha(2), Some("b"), "two")]);
        let p2 = json!([commit_json(&sha(2), Some("b"), "two"), commit_json(&sha(3), None, "three")]);
        t.route(
            &format!("{BASE}/repos/o/r/commits?per_page=100"),
            HttpResponse::new(200, p1.to_string()).with_header("Link", format!("<{BASE}/p2>; rel=\"next\"")),
        );
        t.route(&format!("{BASE}/p2"), HttpResponse::new(200, p2.to_string()));
        let c = client(t);
        let commits = c.fetch_all_commits(&"o/r".parse().unwrap()).unwrap();
        let shas: Vec<_> = commits.iter().map(|c| c.sha.clone()).collect();
        assert_eq!(shas, vec![sha(1), sha(2), sha(3)]);
        assert!(commits[2].author_id.starts_with("anon:"));
        assert_eq!(commits[2].author_id, anonymous_author_id(" jane doe", "jane@example.com "));
    }

    #[test]
    fn empty_repository_yields_empty_stream() {
        let t = FixtureTransport::new();
        t.route(
            &format!("{BASE}/repos/o/r/commits?per_page=100"),
            HttpResponse::new(409, r#"{"message":"Git Repository is empty."}"#),
        );
        let c = client(t);
        assert!(c.fetch_all_commits(&"o/r".parse().unwrap()).unwrap().is_empty());
    }

    #[test]
    fn missing_repository_commits_not_found() {
        let c = client(FixtureTransport::new());
        let err = c.fetch_all_commits(&"o/r".parse().unwrap()).unwrap_err();
        assert!(matches!(err, IngestError::NotFound(_)));
    }

    #[test]
    fn pagination_abort_is_flagged_as_truncated() {
        let t = FixtureTransport::new();
        let p1 = json!([commit_json(&sha(1), Some("a"), "one")]);
        t.route(
            &format!("{BASE}/repos/o/r/commits?per_page=100"),
            HttpResponse::new(200, p1.to_string()).with_header("Link", format!("<{BASE}/p2>; rel=\"next\"")),
        );
        t.route(&format!("{BASE}/p2"), HttpResponse::new(502, "bad gateway"));
        let c = client(t);
        let items: Vec<_> = c.fetch_commits(&"o/r".parse().unwrap()).collect();
        assert_eq!(items.len(), 2);
        assert!(items[0].is_ok());
        match &items[1] {
            Err(IngestError::TruncatedHistory { fetched, .. }) => assert_eq!(*fetched, 1),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn transient_errors_retry_three_times() {
        let t = FixtureTransport::new();
        let url = format!("{BASE}/thing");
        t.route_failure(&url, "reset");
        t.route_failure(&url, "reset");
        t.route_failure(&url, "reset");
        t.route(&url, HttpResponse::new(200, "[]"));
        let c = client(t);
        assert_eq!(c.get(&url).unwrap().status, 200);
        assert_eq!(c.transport().request_count(), 4);

        let t = FixtureTransport::new();
        t.route_failure(&url, "down");
        let c = client(t);
        assert!(matches!(c.get(&url), Err(IngestError::Transport(_))));
        assert_eq!(c.transport().request_count(), 4);
    }

    #[test]
    fn no_request_while_budget_exhausted() {
        let t = FixtureTransport::new();
        let c = client(t).with_budget(0, Utc::now() + chrono::Duration::hours(1));
        let err = c.get(&format!("{BASE}/x")).unwrap_err();
        assert!(matches!(err, IngestError::RateLimited { .. }));
        assert_eq!(c.transport().request_count(), 0);
    }

    #[test]
    fn budget_after_reset_allows_requests() {
        let t = FixtureTransport::new();
        t.route(&format!("{BASE}/x"), HttpResponse::new(200, "{}"));
        let c = client(t).with_budget(0, Utc::now() - chrono::Duration::seconds(1));
        assert_eq!(c.get(&format!("{BASE}/x")).unwrap().status, 200);
    }

    #[test]
    fn headers_update_budget_and_short_waits_sleep() {
        let t = FixtureTransport::new();
        let url = format!("{BASE}/x");
        let reset = Utc::now().timestamp() + 1;
        t.route(
            &url,
            HttpResponse::new(200, "{}")
                .with_header("x-ratelimit-remaining", "0")
                .with_header("x-ratelimit-reset", reset.to_string()),
        );
        let slept = std::sync::Arc::new(Mutex::new(Vec::new()));
        let s2 = slept.clone();
        let c = client(t).with_sleeper(move |d| {
            s2.lock().unwrap().push(d);
            std::thread::sleep(d);
        });
        c.get(&url).unwrap();
        assert_eq!(c.budget().remaining, 0);
        // Second call must wait for the reset rather than hit the API early.
        c.get(&url).unwrap();
        assert_eq!(slept.lock().unwrap().len(), 1);
        assert_eq!(c.transport().request_count(), 2);
    }

    #[test]
    fn rate_limited_response_surfaces_reset() {
        let t = FixtureTransport::new();
        let url = format!("{BASE}/x");
        let reset = Utc::now().timestamp() + 7200;
        t.route(
            &url,
            HttpResponse::new(403, r#"{"message":"API rate limit exceeded"}"#)
                .with_header("x-ratelimit-remaining", "0")
                .with_header("x-ratelimit-reset", reset.to_string()),
        );
        let c = client(t);
        match c.get(&url) {
            Err(IngestError::RateLimited { reset_at }) => assert_eq!(reset_at.timestamp(), reset),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.transport().request_count(), 1);
    }

    #[test]
    fn unauthorised_maps_to_auth_failed() {
        let t = FixtureTransport::new();
        t.route(&format!("{BASE}/x"), HttpResponse::new(401, "{}"));
        assert!(matches!(client(t).get(&format!("{BASE}/x")), Err(IngestError::AuthFailed)));
    }
}
