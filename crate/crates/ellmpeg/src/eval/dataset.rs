//! Benchmark dataset loading.
//!
//! The dataset is JSONL: one query record per line, blank lines ignored.
//! Every structural problem is reported with its line number.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::ToolLabel;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("dataset {0} contains no records")]
    Empty(PathBuf),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?} (first seen on line {first_line})")]
    DuplicateId {
        line: usize,
        first_line: usize,
        id: String,
    },
    #[error("line {line}: {field} must be non-empty")]
    EmptyField { line: usize, field: &'static str },
}

/// One benchmark query with its expected tool and task category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub id: String,
    pub query: String,
    pub tool: ToolLabel,
    pub category: String,
}

pub fn load_dataset(path: &Path) -> Result<Vec<QueryRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen: std::collections::HashMap<String, usize> = Default::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let record: QueryRecord = serde_json::from_str(raw).map_err(|e| DatasetError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.id.trim().is_empty() {
            return Err(DatasetError::EmptyField { line, field: "id" });
        }
        if record.query.trim().is_empty() {
            return Err(DatasetError::EmptyField { line, field: "query" });
        }
        if let Some(&first_line) = seen.get(&record.id) {
            return Err(DatasetError::DuplicateId {
                line,
                first_line,
                id: record.id,
            });
        }
        seen.insert(record.id.clone(), line);
        records.push(record);
    }
    if records.is_empty() {
        return Err(DatasetError::Empty(path.to_path_buf()));
    }
    Ok(records)
}
