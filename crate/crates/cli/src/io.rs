//! Readers for the files commands exchange, and the report buffer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use varcheck_core::dataset::{read_dataset_file, DatasetRow};
use varcheck_core::evalcore::{read_tool_verdicts, FixVerdict};
use varcheck_core::ledger::{EntryKind, Ledger};
use varcheck_core::modelgw::RunRecord;
use varcheck_core::oracle::SystemVerdict;

use crate::error::CliError;

/// Plain-text report. Output is a pure function of the inputs.
#[derive(Default)]
pub struct Report(String);

impl Report {
    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{key}: {value}");
    }

    pub fn line(&mut self, text: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{text}");
    }

    pub fn raw(&mut self, text: &str) {
        self.0.push_str(text);
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

pub fn dataset(path: &Path) -> Result<Vec<DatasetRow>, CliError> {
    read_dataset_file(path).map_err(|e| CliError::data(path.display(), e))
}

pub fn open_ledger(path: &Path) -> Result<Ledger, CliError> {
    Ledger::open(path).map_err(|e| CliError::data(path.display(), e))
}

/// Opens an output ledger and makes sure the file exists even if nothing is written.
pub fn create_ledger(path: &Path) -> Result<Ledger, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    open_ledger(path)
}

/// Reads an input ledger that must already exist.
fn existing_ledger(path: &Path) -> Result<Ledger, CliError> {
    if !path.is_file() {
        return Err(CliError::Data(format!("{}: no such ledger", path.display())));
    }
    open_ledger(path)
}

fn payloads<T: DeserializeOwned>(path: &Path, kind: EntryKind) -> Result<Vec<(String, u32, T)>, CliError> {
    let ledger = existing_ledger(path)?;
    ledger
        .of_kind(kind)
        .map(|e| {
            let value = e.payload_as::<T>().map_err(|err| CliError::data(path.display(), err))?;
            Ok((e.system_id.clone(), e.attempt, value))
        })
        .collect()
}

fn is_ledger(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson" | "json"))
}

pub fn verdicts(path: &Path) -> Result<BTreeMap<String, SystemVerdict>, CliError> {
    Ok(payloads::<SystemVerdict>(path, EntryKind::Oracle)?.into_iter().map(|(id, _, v)| (id, v)).collect())
}

/// Ground truth from a verdict ledger, or from a CSV of system,has_error
/// in which case no failing product sets are known.
pub fn truth(path: &Path) -> Result<BTreeMap<String, SystemVerdict>, CliError> {
    if is_ledger(path) {
        return verdicts(path);
    }
    Ok(bool_table(path)?
        .into_iter()
        .map(|(id, has_error)| {
            let v = SystemVerdict {
                system_id: id.clone(),
                features: Vec::new(),
                outcomes: Vec::new(),
                has_error,
                failing: Vec::new(),
            };
            (id, v)
        })
        .collect())
}

pub fn bool_table(path: &Path) -> Result<BTreeMap<String, bool>, CliError> {
    let file = File::open(path).map_err(|e| CliError::data(path.display(), e))?;
    read_tool_verdicts(file).map_err(|e| CliError::data(path.display(), e))
}

/// Model-run records keyed by (system, attempt).
pub fn runs(path: &Path) -> Result<BTreeMap<(String, u32), RunRecord>, CliError> {
    Ok(payloads::<RunRecord>(path, EntryKind::ModelRun)?.into_iter().map(|(id, a, r)| ((id, a), r)).collect())
}

pub fn fixes(path: &Path) -> Result<BTreeMap<(String, u32), FixVerdict>, CliError> {
    Ok(payloads::<FixVerdict>(path, EntryKind::FixVerdict)?.into_iter().map(|(id, a, v)| ((id, a), v)).collect())
}

/// Rows of a two-column CSV with a header, such as id,stratum.
pub fn pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::data(path.display(), e))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(path.display(), e))?;
        match (rec.get(0), rec.get(1)) {
            (Some(a), Some(b)) if !a.trim().is_empty() => out.push((a.trim().to_string(), b.trim().to_string())),
            _ => return Err(CliError::Data(format!("{}: expected two columns per row", path.display()))),
        }
    }
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::data(path.display(), e))
}
