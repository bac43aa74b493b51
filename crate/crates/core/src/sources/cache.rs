use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

use super::FetchError;
use crate::extraction::MediaKind;

pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 60 * 60);

/// Content-addressed page cache: one file per url, named by the SHA-256 of
/// the url. Writes go through a temp file and a rename, so readers see
/// either the old or the new entry, never a torn one.
#[derive(Debug, Clone)]
pub struct CacheStore {
    dir: PathBuf,
    ttl: Duration,
}

/// Cached page contents.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub fetched_at: u64,
    pub media_kind: MediaKind,
    pub body: Vec<u8>,
}

fn cache_err(e: impl ToString) -> FetchError {
    FetchError::Cache(e.to_string())
}

impl CacheStore {
    pub fn new(dir: impl Into<PathBuf>, ttl: Duration) -> Self {
        Self { dir: dir.into(), ttl }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn key(url: &str) -> String {
        hex::encode(Sha256::digest(url.as_bytes()))
    }

    fn path(&self, url: &str) -> PathBuf {
        self.dir.join(format!("{}.page", Self::key(url)))
    }

    /// The entry for `url` if one exists and is younger than the TTL at
    /// `now` (seconds since the epoch). A zero TTL never hits.
    pub fn get(&self, url: &str, now: u64) -> Result<Option<CacheEntry>, FetchError> {
        let bytes = match std::fs::read(self.path(url)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(cache_err(e)),
        };
        let nl = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| cache_err("corrupt entry"))?;
        let head = std::str::from_utf8(&bytes[..nl]).map_err(cache_err)?;
        let (at, media) = head.split_once(' ').ok_or_else(|| cache_err("corrupt entry header"))?;
        let fetched_at: u64 = at.parse().map_err(cache_err)?;
        if now.saturating_sub(fetched_at) >= self.ttl.as_secs() {
            return Ok(None);
        }
        Ok(Some(CacheEntry {
            fetched_at,
            media_kind: media.parse().map_err(cache_err)?,
            body: bytes[nl + 1..].to_vec(),
        }))
    }

    pub fn put(&self, url: &str, entry: &CacheEntry) -> Result<(), FetchError> {
        std::fs::create_dir_all(&self.dir).map_err(cache_err)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(cache_err)?;
        write!(tmp, "{} {}\n", entry.fetched_at, entry.media_kind.extension()).map_err(cache_err)?;
        tmp.write_all(&entry.body).map_err(cache_err)?;
        tmp.persist(self.path(url)).map_err(cache_err)?;
        Ok(())
    }
}
