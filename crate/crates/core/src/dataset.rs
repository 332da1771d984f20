//! Dataset files: delimited text with header `id,code,label`, multi-line
//! code fields quoted per the usual CSV convention.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimedLabel {
    Compiles,
    Errors,
    Unknown,
}

impl ClaimedLabel {
    /// `Some(true)` for an error claim, `Some(false)` for a compile claim.
    pub fn claims_error(self) -> Option<bool> {
        match self {
            Self::Compiles => Some(false),
            Self::Errors => Some(true),
            Self::Unknown => None,
        }
    }
}

impl fmt::Display for ClaimedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Compiles => "compiles",
            Self::Errors => "errors",
            Self::Unknown => "unknown",
        })
    }
}

impl FromStr for ClaimedLabel {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "compiles" => Ok(Self::Compiles),
            "errors" => Ok(Self::Errors),
            "" | "unknown" => Ok(Self::Unknown),
            other => Err(DatasetError::BadLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub id: String,
    pub code: String,
    pub label: ClaimedLabel,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("duplicate system id {0:?}")]
    DuplicateId(String),
    #[error("bad label {0:?} (expected compiles, errors or unknown)")]
    BadLabel(String),
}

#[derive(Deserialize)]
struct RawRow {
    id: String,
    code: String,
    #[serde(default)]
    label: String,
}

pub fn read_dataset(reader: impl Read) -> Result<Vec<DatasetRow>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for raw in rdr.deserialize::<RawRow>() {
        let raw = raw?;
        if !seen.insert(raw.id.clone()) {
            return Err(DatasetError::DuplicateId(raw.id));
        }
        rows.push(DatasetRow { label: raw.label.parse()?, id: raw.id, code: raw.code });
    }
    Ok(rows)
}

pub fn read_dataset_file(path: &Path) -> Result<Vec<DatasetRow>, DatasetError> {
    read_dataset(std::fs::File::open(path)?)
}

pub fn write_dataset(writer: impl Write, rows: &[DatasetRow]) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "code", "label"])?;
    for row in rows {
        wtr.write_record([row.id.as_str(), row.code.as_str(), &row.label.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_quoted_multiline_code() {
        let text = "id,code,label\nl1,\"#ifdef A\nint x = \"\"s\"\";\n#endif\n\",compiles\nl2,int y;,unknown\n";
        let rows = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].code, "#ifdef A\nint x = \"s\";\n#endif\n");
        assert_eq!(rows[0].label, ClaimedLabel::Compiles);
        assert_eq!(rows[1].label, ClaimedLabel::Unknown);
    }

    #[test]
    fn rejects_duplicates_and_bad_labels() {
        let dup = "id,code,label\na,x,compiles\na,y,errors\n";
        assert!(matches!(read_dataset(dup.as_bytes()), Err(DatasetError::DuplicateId(_))));
        let bad = "id,code,label\na,x,maybe\n";
        assert!(matches!(read_dataset(bad.as_bytes()), Err(DatasetError::BadLabel(_))));
    }

    proptest! {
        #[test]
        fn rows_round_trip(code in "[ -~\n\"]{1,80}", id in "[a-z0-9_]{1,10}") {
            let rows = vec![DatasetRow { id, code, label: ClaimedLabel::Errors }];
            let mut buf = Vec::new();
            write_dataset(&mut buf, &rows).unwrap();
            prop_assert_eq!(read_dataset(buf.as_slice()).unwrap(), rows);
        }
    }
}
