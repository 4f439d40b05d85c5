//! Persistent best-known configurations, keyed by a content hash of
//! `(set definition, s, N)`.
//!
//! The file is a JSON object mapping keys to entries. Entries that fail to
//! parse, do not re-realize on their set, or whose stored energy disagrees
//! with the configuration are skipped with a warning. An entry is only ever
//! replaced by one with strictly lower energy.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{SolveResult, Status};
use crate::energy::{riesz_energy, Configuration};
use crate::geometry::SetSpec;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub energy: f64,
    pub configuration: Configuration,
    pub status: Status,
    /// Seconds since the Unix epoch at insertion.
    pub timestamp: u64,
    pub n: usize,
    pub set_hash: String,
}

#[derive(Debug, Default)]
pub struct Cache {
    path: Option<PathBuf>,
    entries: BTreeMap<String, CacheEntry>,
}

pub fn cache_key(set_hash: &str, s: f64, n: usize) -> String {
    let raw = format!("{set_hash}|{:016x}|{n}", s.to_bits());
    hex::encode(Sha256::digest(raw.as_bytes()))
}

impl Cache {
    pub fn in_memory() -> Self {
        Cache::default()
    }

    /// Loads the cache at `path`. A missing file gives an empty cache; an
    /// unreadable or malformed one is reported and treated as empty.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let mut cache = Cache {
            path: Some(path.clone()),
            entries: BTreeMap::new(),
        };
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(cache),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        let raw: BTreeMap<String, serde_json::Value> = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                warn!("ignoring unreadable cache {}: {e}", path.display());
                return Ok(cache);
            }
        };
        for (key, value) in raw {
            match serde_json::from_value::<CacheEntry>(value) {
                Ok(entry) => {
                    cache.entries.insert(key, entry);
                }
                Err(e) => warn!("skipping corrupt cache entry {key}: {e}"),
            }
        }
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the cache atomically (temporary file, then rename). No-op for an
    /// in-memory cache.
    pub fn save(&self) -> Result<(), CacheError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let io_err = |source| CacheError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(&self.entries).expect("cache entries serialize");
        fs::write(&tmp, text).map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)
    }

    /// Valid entry for `(set, s, n)`, if any.
    pub fn get(&self, set: &SetSpec, s: f64, n: usize) -> Option<&CacheEntry> {
        let key = cache_key(&set.content_hash(), s, n);
        let entry = self.entries.get(&key)?;
        if entry.n != n || entry.configuration.len() != n || entry.configuration.s != s {
            warn!("skipping cache entry {key}: header does not match");
            return None;
        }
        if let Err(e) = entry.configuration.validate(set) {
            warn!("skipping cache entry {key}: {e}");
            return None;
        }
        let total = riesz_energy(&entry.configuration.points, s).ok()?.total;
        if (total - entry.energy).abs() > 1e-9 * total.abs().max(f64::MIN_POSITIVE) {
            warn!("skipping cache entry {key}: stored energy does not match its configuration");
            return None;
        }
        Some(entry)
    }

    /// Records `result` if no valid entry exists or it has strictly lower
    /// energy. Returns whether the cache changed.
    pub fn offer(&mut self, set: &SetSpec, s: f64, result: &SolveResult) -> bool {
        let n = result.config.len();
        if let Some(existing) = self.get(set, s, n) {
            if existing.energy <= result.energy.total {
                return false;
            }
        }
        let set_hash = set.content_hash();
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.entries.insert(
            cache_key(&set_hash, s, n),
            CacheEntry {
                energy: result.energy.total,
                configuration: result.config.clone(),
                status: result.status,
                timestamp,
                n,
                set_hash,
            },
        );
        true
    }

    /// Cached entry as a [`SolveResult`].
    pub fn result(&self, set: &SetSpec, s: f64, n: usize) -> Option<SolveResult> {
        let entry = self.get(set, s, n)?;
        SolveResult::from_config(entry.configuration.clone(), entry.status, 0).ok()
    }
}
