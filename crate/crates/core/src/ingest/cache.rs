use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CommitRecord, GoneMarker, IngestError, RawRepo, RepoRef};

/// The resources stored per repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceKind {
    Repo,
    Commits,
    Gone,
}

impl ResourceKind {
    pub fn file_stem(self) -> &'static str {
        match self {
            ResourceKind::Repo => "repo",
            ResourceKind::Commits => "commits",
            ResourceKind::Gone => "gone",
        }
    }

    const ALL: [ResourceKind; 3] = [ResourceKind::Repo, ResourceKind::Commits, ResourceKind::Gone];
}

/// A repository directory found in the cache and the resources it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub repo: RepoRef,
    pub kinds: Vec<ResourceKind>,
}

/// On-disk cache laid out as `<root>/<owner>__<name>/<resource>.json`, each
/// file accompanied by a `<resource>.json.sha256` checksum sidecar.
///
/// Writes go through a temporary file and a rename, so concurrent readers
/// never observe a half-written payload.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, repo: &RepoRef, kind: ResourceKind) -> PathBuf {
        self.root
            .join(repo.cache_key())
            .join(format!("{}.json", kind.file_stem()))
    }

    fn checksum_path(payload: &Path) -> PathBuf {
        let mut p = payload.as_os_str().to_owned();
        p.push(".sha256");
        PathBuf::from(p)
    }

    fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
        let tmp = path.with_extension(format!(
            "tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(bytes).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, path).map_err(io_err(path))
    }

    pub fn put<V: Serialize>(&self, repo: &RepoRef, kind: ResourceKind, value: &V) -> Result<(), IngestError> {
        let path = self.path_for(repo, kind);
        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let bytes = serde_json::to_vec(value).map_err(|e| IngestError::Payload(e.to_string()))?;
        Self::write_atomic(&path, &bytes)?;
        Self::write_atomic(&Self::checksum_path(&path), sha256_hex(&bytes).as_bytes())
    }

    fn read_verified(&self, path: &Path) -> Result<Option<Vec<u8>>, IngestError> {
        if !path.exists() {
            return Ok(None);
        }
        let sidecar = Self::checksum_path(path);
        // A writer may be between its two renames; give it one more look.
        for _ in 0..2 {
            let bytes = fs::read(path).map_err(io_err(path))?;
            let expected = fs::read_to_string(&sidecar).unwrap_or_default();
            if expected.trim() == sha256_hex(&bytes) {
                return Ok(Some(bytes));
            }
            std::thread::sleep(std::time::Duration::from_millis(10));
        }
        let _ = fs::remove_file(path);
        let _ = fs::remove_file(&sidecar);
        Err(IngestError::CorruptCache {
            path: path.display().to_string(),
        })
    }

    /// Reads an entry; `Ok(None)` when absent. A checksum mismatch evicts
    /// the entry and reports [`IngestError::CorruptCache`].
    pub fn get<V: DeserializeOwned>(&self, repo: &RepoRef, kind: ResourceKind) -> Result<Option<V>, IngestError> {
        let path = self.path_for(repo, kind);
        match self.read_verified(&path)? {
            None => Ok(None),
            Some(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| {
                let _ = fs::remove_file(&path);
                let _ = fs::remove_file(Self::checksum_path(&path));
                log::warn!("evicting undecodable cache entry {}: {e}", path.display());
                IngestError::CorruptCache {
                    path: path.display().to_string(),
                }
            }),
        }
    }

    pub fn contains(&self, repo: &RepoRef, kind: ResourceKind) -> bool {
        self.path_for(repo, kind).exists()
    }

    pub fn put_repo(&self, raw: &RawRepo) -> Result<(), IngestError> {
        self.put(&raw.repo, ResourceKind::Repo, raw)
    }

    pub fn get_repo(&self, repo: &RepoRef) -> Result<Option<RawRepo>, IngestError> {
        self.get(repo, ResourceKind::Repo)
    }

    pub fn put_commits(&self, repo: &RepoRef, commits: &[CommitRecord]) -> Result<(), IngestError> {
        self.put(repo, ResourceKind::Commits, &commits)
    }

    pub fn get_commits(&self, repo: &RepoRef) -> Result<Option<Vec<CommitRecord>>, IngestError> {
        self.get(repo, ResourceKind::Commits)
    }

    pub fn mark_gone(&self, marker: &GoneMarker) -> Result<(), IngestError> {
        self.put(&marker.repo, ResourceKind::Gone, marker)
    }

    pub fn get_gone(&self, repo: &RepoRef) -> Result<Option<GoneMarker>, IngestError> {
        self.get(repo, ResourceKind::Gone)
    }

    /// Returns the cached value unless `refresh` is set or nothing is cached,
    /// in which case `fetch` runs and its result is stored.
    pub fn get_or_fetch<V, F>(&self, repo: &RepoRef, kind: ResourceKind, refresh: bool, fetch: F) -> Result<V, IngestError>
    where
        V: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<V, IngestError>,
    {
        if !refresh {
            match self.get(repo, kind) {
                Ok(Some(v)) => return Ok(v),
                Ok(None) => {}
                Err(IngestError::CorruptCache { path }) => log::warn!("refetching corrupt entry {path}"),
                Err(e) => return Err(e),
            }
        }
        let value = fetch()?;
        self.put(repo, kind, &value)?;
        Ok(value)
    }

    /// Lists repositories present in the cache, sorted by reference.
    pub fn entries(&self) -> Result<Vec<CacheEntry>, IngestError> {
        if !self.root.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for dirent in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let dirent = dirent.map_err(io_err(&self.root))?;
            if !dirent.path().is_dir() {
                continue;
            }
            let name = dirent.file_name().to_string_lossy().into_owned();
            let Some((owner, repo_name)) = name.split_once("__") else {
                continue;
            };
            let Ok(repo) = RepoRef::new(owner, repo_name) else {
                continue;
            };
            let kinds: Vec<_> = ResourceKind::ALL
                .into_iter()
                .filter(|k| self.contains(&repo, *k))
                .collect();
            if !kinds.is_empty() {
                out.push(CacheEntry { repo, kinds });
            }
        }
        out.sort_by(|a, b| a.repo.cmp(&b.repo));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use std::collections::BTreeMap;

    fn sample_repo(description: Option<&str>) -> RawRepo {
        RawRepo {
            repo: "octo/widget".parse().unwrap(),
            description: description.map(str::to_string),
            readme: None,
            topics: vec!["cli".into()],
            licence_key: None,
            languages: BTreeMap::from([("Rust".to_string(), 1200)]),
            labels: vec!["bug".into()],
            contributors: vec![],
            root_entries: vec!["Cargo.toml".into()],
            releases: 2,
            stars: 10,
            forks: 1,
            has_workflow_files: true,
            fetched_at: Utc.with_ymd_and_hms(2022, 3, 21, 0, 0, 0).unwrap(),
        }
    }

    #[test]
    fn absent_description_survives_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let raw = sample_repo(None);
        cache.put_repo(&raw).unwrap();
        let back = cache.get_repo(&raw.repo).unwrap().unwrap();
        assert_eq!(back, raw);
        assert!(back.description.is_none());
        assert!(dir.path().join("octo__widget/repo.json").exists());
        assert!(dir.path().join("octo__widget/repo.json.sha256").exists());
    }

    #[test]
    fn tampered_entry_is_evicted() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let raw = sample_repo(Some("x"));
        cache.put_repo(&raw).unwrap();
        let path = cache.path_for(&raw.repo, ResourceKind::Repo);
        let mut text = fs::read_to_string(&path).unwrap();
        text = text.replace("\"stars\":10", "\"stars\":11");
        fs::write(&path, text).unwrap();
        assert!(matches!(cache.get_repo(&raw.repo), Err(IngestError::CorruptCache { .. })));
        assert!(!path.exists());
        assert!(cache.get_repo(&raw.repo).unwrap().is_none());
    }

    #[test]
    fn get_or_fetch_only_refreshes_on_flag() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let repo: RepoRef = "octo/widget".parse().unwrap();
        let v: u32 = cache.get_or_fetch(&repo, ResourceKind::Repo, false, || Ok(1)).unwrap();
        assert_eq!(v, 1);
        let v: u32 = cache.get_or_fetch(&repo, ResourceKind::Repo, false, || Ok(2)).unwrap();
        assert_eq!(v, 1);
        let v: u32 = cache.get_or_fetch(&repo, ResourceKind::Repo, true, || Ok(3)).unwrap();
        assert_eq!(v, 3);
    }

    #[test]
    fn entries_lists_cached_repositories() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        cache.put_repo(&sample_repo(None)).unwrap();
        cache.put_commits(&"a/b".parse().unwrap(), &[]).unwrap();
        let entries = cache.entries().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].repo.to_string(), "a/b");
        assert_eq!(entries[0].kinds, vec![ResourceKind::Commits]);
        assert_eq!(entries[1].kinds, vec![ResourceKind::Repo]);
    }
}
