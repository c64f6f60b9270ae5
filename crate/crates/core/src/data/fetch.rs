//! HTTP fetcher for the benchmark datasets, with a local cache.
//!
//! The built-in registry covers the UCI datasets used by the benchmark
//! harness. Entries may be overridden or extended from a JSON registry file
//! mapping `name -> {url, sha256, format, label_col, drop_cols}`.
//!
//! Cache layout: `<cache_dir>/<name>.data` holds the raw download. A file
//! already in the cache is reused without network access. When the registry
//! records no checksum, the checksum observed on first fetch is stored in a
//! `<name>.sha256` sidecar and verified on later reads.

use super::{load_dataset, DataFormat, Dataset};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "METRIC_SVM_CACHE";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub url: String,
    /// Hex-encoded SHA-256 of the raw file; verified when present.
    #[serde(default)]
    pub sha256: Option<String>,
    pub format: DataFormat,
    /// Label column index; defaults to the last column.
    #[serde(default)]
    pub label_col: Option<usize>,
    /// Identifier columns dropped before parsing features.
    #[serde(default)]
    pub drop_cols: Vec<usize>,
}

/// Name-to-source mapping for fetchable datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    pub entries: BTreeMap<String, RegistryEntry>,
}

impl Registry {
    /// The shipped registry of UCI benchmark datasets.
    pub fn built_in() -> Self {
        let uci = "https://archive.ics.uci.edu/ml/machine-learning-databases";
        let mut entries = BTreeMap::new();
        let mut add = |name: &str, url: String, label_col: Option<usize>, drop_cols: Vec<usize>| {
            entries.insert(
                name.to_string(),
                RegistryEntry {
                    url,
                    sha256: None,
                    format: DataFormat::Csv,
                    label_col,
                    drop_cols,
                },
            );
        };
        add(
            "sonar",
            format!("{uci}/undocumented/connectionist-bench/sonar/sonar.all-data"),
            None,
            vec![],
        );
        add(
            "wpbc",
            format!("{uci}/breast-cancer-wisconsin/wpbc.data"),
            Some(1),
            vec![0],
        );
        add(
            "ionosphere",
            format!("{uci}/ionosphere/ionosphere.data"),
            None,
            vec![],
        );
        add(
            "wdbc",
            format!("{uci}/breast-cancer-wisconsin/wdbc.data"),
            Some(1),
            vec![0],
        );
        add(
            "liver",
            format!("{uci}/liver-disorders/bupa.data"),
            None,
            vec![],
        );
        add(
            "musk1",
            format!("{uci}/musk/clean1.data.Z"),
            Some(168),
            vec![0, 1],
        );
        Registry { entries }
    }

    /// Loads a user registry file and merges it over the built-in entries.
    pub fn with_overrides(path: &Path) -> Result<Self> {
        let mut base = Self::built_in();
        let text = std::fs::read_to_string(path)?;
        let user: BTreeMap<String, RegistryEntry> = serde_json::from_str(&text)?;
        base.entries.extend(user);
        Ok(base)
    }

    /// Registered dataset names, sorted.
    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<&RegistryEntry> {
        self.entries.get(name).ok_or_else(|| {
            Error::Fetch(format!(
                "unknown dataset '{name}'; supported: {}",
                self.entries.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

/// Resolves the cache directory: explicit flag, else `METRIC_SVM_CACHE`,
/// else `./.metric-svm-cache`.
pub fn cache_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var(CACHE_ENV) {
        return PathBuf::from(p);
    }
    PathBuf::from(".metric-svm-cache")
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

fn download(url: &str) -> Result<Vec<u8>> {
    let mut last_err = String::new();
    for attempt in 0..3 {
        if attempt > 0 {
            std::thread::sleep(std::time::Duration::from_millis(250 << attempt));
        }
        match ureq::get(url).call() {
            Ok(mut resp) => {
                return resp
                    .body_mut()
                    .read_to_vec()
                    .map_err(|e| Error::Fetch(format!("reading body of {url}: {e}")));
            }
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(Error::Fetch(format!(
        "failed to download {url} after 3 attempts ({last_err}); \
         place the file in the cache directory to work offline"
    )))
}

/// Fetches a dataset by registry name, caching the raw file under
/// `cache_dir`. Cached files are reused offline; downloads are verified
/// against the recorded checksum and written via an atomic rename.
pub fn fetch_dataset(name: &str, cache_dir: &Path, registry: &Registry) -> Result<Dataset> {
    let entry = registry.get(name)?;
    std::fs::create_dir_all(cache_dir)?;
    let raw_path = cache_dir.join(format!("{name}.data"));
    let sidecar = cache_dir.join(format!("{name}.sha256"));

    if !raw_path.exists() {
        let bytes = download(&entry.url)?;
        let digest = sha256_hex(&bytes);
        if let Some(expected) = &entry.sha256 {
            if !expected.eq_ignore_ascii_case(&digest) {
                return Err(Error::Fetch(format!(
                    "checksum mismatch for '{name}': expected {expected}, got {digest}"
                )));
            }
        }
        let tmp = cache_dir.join(format!(".{name}.data.tmp.{}", std::process::id()));
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, &raw_path)?;
        if entry.sha256.is_none() {
            std::fs::write(&sidecar, &digest)?;
        }
    } else {
        let bytes = std::fs::read(&raw_path)?;
        let digest = sha256_hex(&bytes);
        let expected = match &entry.sha256 {
            Some(e) => Some(e.clone()),
            None => std::fs::read_to_string(&sidecar)
                .ok()
                .map(|s| s.trim().to_string()),
        };
        if let Some(expected) = expected {
            if !expected.eq_ignore_ascii_case(&digest) {
                return Err(Error::Fetch(format!(
                    "cached file for '{name}' fails checksum: expected {expected}, got {digest}"
                )));
            }
        }
    }
    let mut ds = load_dataset(&raw_path, entry.format, entry.label_col, &entry.drop_cols)?;
    ds.name = name.to_string();
    Ok(ds)
}

/// Resolves a dataset name to data: a `<name>.csv` placed in the cache
/// directory takes priority (user-supplied local data), otherwise the
/// registry fetch path is used.
pub fn resolve_dataset(name: &str, cache: &Path, registry: &Registry) -> Result<Dataset> {
    let local = cache.join(format!("{name}.csv"));
    if local.exists() {
        let mut ds = load_dataset(&local, DataFormat::Csv, None, &[])?;
        ds.name = name.to_string();
        return Ok(ds);
    }
    fetch_dataset(name, cache, registry)
}
