use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SpellingFinding;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: u64 = 5;
const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Accepted nonnative spellings plus the running tallies of unknown tokens.
///
/// Tokens whose cumulative tally reaches the threshold are surfaced in
/// `pending` for a human to accept or reject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhitelistStore {
    pub version: u32,
    pub threshold: u64,
    pub accepted: BTreeSet<String>,
    pub pending: BTreeSet<String>,
    pub tallies: BTreeMap<String, u64>,
}

impl Default for WhitelistStore {
    fn default() -> Self {
        WhitelistStore::with_threshold(DEFAULT_THRESHOLD)
    }
}

impl WhitelistStore {
    pub fn with_threshold(threshold: u64) -> Self {
        WhitelistStore {
            version: STORE_VERSION,
            threshold: threshold.max(1),
            accepted: BTreeSet::new(),
            pending: BTreeSet::new(),
            tallies: BTreeMap::new(),
        }
    }

    pub fn is_accepted(&self, normalized: &str) -> bool {
        self.accepted.contains(normalized)
    }

    /// Adds a token to the accepted set directly (seeding a store).
    pub fn accept(&mut self, token: &str) {
        let token = token.to_lowercase();
        self.pending.remove(&token);
        self.tallies.remove(&token);
        self.accepted.insert(token);
    }

    /// Accumulates per-essay frequencies; returns tokens that became pending.
    pub fn record_unknowns(&mut self, findings: &[SpellingFinding]) -> Vec<String> {
        let mut surfaced = Vec::new();
        for f in findings {
            if self.accepted.contains(&f.normalized) {
                continue;
            }
            let tally = self.tallies.entry(f.normalized.clone()).or_insert(0);
            *tally += f.frequency_in_essay;
            if *tally >= self.threshold && self.pending.insert(f.normalized.clone()) {
                surfaced.push(f.normalized.clone());
            }
        }
        surfaced
    }

    pub fn resolve_pending(&mut self, token: &str, decision: Decision) -> Result<()> {
        let token = token.to_lowercase();
        if !self.pending.remove(&token) {
            return Err(Error::NotPending(token));
        }
        match decision {
            Decision::Accept => {
                self.tallies.remove(&token);
                self.accepted.insert(token);
            }
            Decision::Reject => {
                self.tallies.insert(token, 0);
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let store: WhitelistStore = serde_json::from_str(&text)?;
        if store.version != STORE_VERSION {
            return Err(Error::FormatVersion {
                what: "whitelist store",
                found: store.version,
                expected: STORE_VERSION,
            });
        }
        if store.threshold == 0 {
            return Err(Error::invalid("whitelist threshold must be positive"));
        }
        if let Some(t) = store.accepted.intersection(&store.pending).next() {
            return Err(Error::invalid(format!("`{t}` is both accepted and pending")));
        }
        Ok(store)
    }

    /// Loads the store, or starts an empty one when the file does not exist.
    pub fn load_or_default(path: &Path, threshold: u64) -> Result<Self> {
        if path.exists() {
            WhitelistStore::load(path)
        } else {
            Ok(WhitelistStore::with_threshold(threshold))
        }
    }

    /// Writes to a sibling temp file and renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(path, json.as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Exclusive lock on a store file, held for the lifetime of the value.
#[derive(Debug)]
pub struct StoreLock {
    lock: PathBuf,
}

impl StoreLock {
    pub fn acquire(store: &Path) -> Result<Self> {
        let mut name = store.as_os_str().to_owned();
        name.push(".lock");
        let lock = PathBuf::from(name);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(StoreLock { lock })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked {
                path: store.to_path_buf(),
                lock,
            }),
            Err(e) => Err(Error::io(&lock, e)),
        }
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
