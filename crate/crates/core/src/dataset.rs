//! Line-delimited JSON dataset ingestion.
//!
//! Each line carries one instance together with its candidate responses:
//!
//! ```json
//! {"id":"r1","dataset":"reviews","domain":"hotel","task_type":"summarization",
//!  "context":"...","question":"...","reference_answer":"...",
//!  "responses":[{"model_id":"m1","text":"..."}]}
//! ```
//!
//! Unknown fields are ignored. Blank lines are skipped.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{validate_instance, GeneratedResponse, Instance, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Jsonl,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ValidationError },
    #[error("line {line}: duplicate instance id {id:?}")]
    DuplicateId { line: usize, id: String },
}

/// One dataset record: an instance and the responses to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(flatten)]
    pub instance: Instance,
    #[serde(default)]
    pub responses: Vec<GeneratedResponse>,
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Vec<Record>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_owned(), source })?;
    match format {
        DatasetFormat::Jsonl => parse_jsonl(&text),
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Record>, DatasetError> {
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| DatasetError::Malformed { line: line_no, reason: e.to_string() })?;
        validate_instance(&record.instance, &record.responses)
            .map_err(|source| DatasetError::Invalid { line: line_no, source })?;
        if !ids.insert(record.instance.id.clone()) {
            return Err(DatasetError::DuplicateId { line: line_no, id: record.instance.id });
        }
        records.push(record);
    }
    Ok(records)
}

/// Canonical serialization: one compact JSON object per line.
pub fn to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: impl AsRef<Path>, records: &[Record]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(to_jsonl(records).as_bytes())
}
