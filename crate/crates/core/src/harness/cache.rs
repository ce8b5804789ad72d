//! Content-addressed on-disk store for fitted per-fold models.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{Error, Result};

const CACHE_FORMAT: &str = "ovo-cache-v1";

/// SHA-256 over every instance: id, subgroup, feature bits and class.
pub fn dataset_fingerprint(dataset: &Dataset) -> String {
    let mut h = Sha256::new();
    for name in dataset.feature_names() {
        h.update(name.as_bytes());
        h.update([0]);
    }
    for attr in dataset.sensitive_schema() {
        h.update(attr.name.as_bytes());
        h.update([0]);
        for v in &attr.values {
            h.update(v.as_bytes());
            h.update([0]);
        }
    }
    for inst in dataset.instances() {
        h.update((inst.id as u64).to_le_bytes());
        for v in inst.sensitive.values() {
            h.update(v.as_bytes());
            h.update([0]);
        }
        for x in inst.features.iter() {
            h.update(x.to_bits().to_le_bytes());
        }
        h.update([u8::from(inst.true_class.is_favorable())]);
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug)]
pub struct ModelCache {
    dir: PathBuf,
}

impl ModelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ModelCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Entry key: hash of the serialized `key` value.
    pub fn key<K: Serialize>(key: &K) -> Result<String> {
        let mut h = Sha256::new();
        h.update(CACHE_FORMAT.as_bytes());
        h.update(serde_json::to_vec(key)?);
        Ok(hex::encode(h.finalize()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Loads the entry, or computes, stores and returns it. Unreadable
    /// entries are recomputed.
    pub fn get_or_insert<K, T, F>(&self, key: &K, compute: F) -> Result<T>
    where
        K: Serialize,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let path = self.path(&Self::key(key)?);
        if let Ok(text) = fs::read(&path) {
            match serde_json::from_slice(&text) {
                Ok(value) => {
                    log::debug!("cache hit {}", path.display());
                    return Ok(value);
                }
                Err(e) => log::warn!("discarding cache entry {}: {e}", path.display()),
            }
        }
        let value = compute()?;
        self.store(&path, &value)?;
        Ok(value)
    }

    fn store<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        serde_json::to_writer(&mut tmp, value)?;
        tmp.flush().map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
        Ok(())
    }
}
