//! Append-only JSON-lines ledger with at most one entry per
//! (kind, system, attempt) key.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Oracle,
    ModelRun,
    FixVerdict,
    Mutant,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub kind: EntryKind,
    pub system_id: String,
    pub attempt: u32,
    pub payload: Value,
    /// Seconds since the Unix epoch at write time.
    pub timestamp: u64,
    pub duration_secs: f64,
}

impl LedgerEntry {
    pub fn new(
        kind: EntryKind,
        system_id: impl Into<String>,
        attempt: u32,
        payload: &impl Serialize,
        duration_secs: f64,
    ) -> Result<Self, LedgerError> {
        Ok(Self {
            kind,
            system_id: system_id.into(),
            attempt,
            payload: serde_json::to_value(payload)?,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            duration_secs,
        })
    }

    pub fn payload_as<T: DeserializeOwned>(&self) -> Result<T, LedgerError> {
        Ok(serde_json::from_value(self.payload.clone())?)
    }

    fn key(&self) -> (EntryKind, String, u32) {
        (self.kind, self.system_id.clone(), self.attempt)
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("ledger {path}: line {line} is not a valid entry: {reason}")]
    Corrupt { path: String, line: usize, reason: String },
    #[error("ledger payload: {0}")]
    Payload(#[from] serde_json::Error),
}

pub struct Ledger {
    path: PathBuf,
    entries: Vec<LedgerEntry>,
    keys: HashSet<(EntryKind, String, u32)>,
}

impl Ledger {
    /// Loads the ledger at `path`; a missing file is an empty ledger.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, LedgerError> {
        let path = path.into();
        let entries = if path.exists() { read_entries(&path)? } else { Vec::new() };
        let keys = entries.iter().map(LedgerEntry::key).collect();
        Ok(Self { path, entries, keys })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn of_kind(&self, kind: EntryKind) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    pub fn contains(&self, kind: EntryKind, system_id: &str, attempt: u32) -> bool {
        self.keys.contains(&(kind, system_id.to_string(), attempt))
    }

    /// Writes `entry` unless its key is already present. Returns whether it was written.
    pub fn append(&mut self, entry: LedgerEntry) -> Result<bool, LedgerError> {
        if !self.keys.insert(entry.key()) {
            return Ok(false);
        }
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.flush()?;
        self.entries.push(entry);
        Ok(true)
    }
}

/// Reads every entry. A final line cut off mid-write is ignored.
pub fn read_entries(path: &Path) -> Result<Vec<LedgerEntry>, LedgerError> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let complete = std::fs::read(path)?.last().is_none_or(|&b| b == b'\n');
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LedgerEntry>(line) {
            Ok(e) => out.push(e),
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => {
                return Err(LedgerError::Corrupt {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}
