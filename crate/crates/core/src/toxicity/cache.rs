use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub scorer_id: String,
    pub text_hash: String,
    pub value: f64,
}

/// Scores keyed by `(scorer_id, text_hash)`, persisted as an append-only
/// JSON-lines file. Reads take a shared lock; inserts and flushes serialize.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<(String, String), f64>>,
    unflushed: Mutex<Vec<CacheRecord>>,
    path: Option<PathBuf>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the cache at `path`, loading existing records. A missing file is
    /// an empty cache; later records for the same key win.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line)
                    .map_err(|e| Error::parse(i + 1, e.to_string()).in_file(&path))?;
                entries.insert((rec.scorer_id, rec.text_hash), rec.value);
            }
        }
        Ok(ScoreCache {
            entries: RwLock::new(entries),
            unflushed: Mutex::new(Vec::new()),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, scorer_id: &str, text_hash: &str) -> Option<f64> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(&(scorer_id.to_string(), text_hash.to_string()))
            .copied()
    }

    pub fn insert(&self, scorer_id: &str, text_hash: &str, value: f64) {
        let mut unflushed = self.unflushed.lock().expect("cache lock poisoned");
        self.entries
            .write()
            .expect("cache lock poisoned")
            .insert((scorer_id.to_string(), text_hash.to_string()), value);
        unflushed.push(CacheRecord {
            scorer_id: scorer_id.to_string(),
            text_hash: text_hash.to_string(),
            value,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends records inserted since the last flush. No-op for in-memory caches.
    pub fn flush(&self) -> Result<usize> {
        let Some(path) = &self.path else {
            return Ok(0);
        };
        let mut unflushed = self.unflushed.lock().expect("cache lock poisoned");
        if unflushed.is_empty() {
            return Ok(0);
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = BufWriter::new(file);
        for rec in unflushed.iter() {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let n = unflushed.len();
        unflushed.clear();
        Ok(n)
    }
}
