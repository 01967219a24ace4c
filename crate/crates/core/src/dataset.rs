//! Newline-delimited JSON dataset files. Every line is one record carrying
//! a `"v"` schema version.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::DatasetRecord;

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: schema version {found:?}, expected {DATASET_VERSION}")]
    SchemaVersionMismatch { line: usize, found: Option<u64> },
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    v: u32,
    #[serde(flatten)]
    record: T,
}

pub fn write_dataset(records: &[DatasetRecord], path: &Path) -> Result<(), DatasetError> {
    write_jsonl(records, path)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    read_jsonl(path)
}

/// Writes any serializable records in the versioned line format.
pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(
            &mut w,
            &Envelope {
                v: DATASET_VERSION,
                record: r,
            },
        )
        .map_err(io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| DatasetError::BadLine {
                line: line_no,
                message: e.to_string(),
            })?;
        let found = value.get("v").and_then(|v| v.as_u64());
        if found != Some(DATASET_VERSION as u64) {
            return Err(DatasetError::SchemaVersionMismatch {
                line: line_no,
                found,
            });
        }
        let env: Envelope<T> =
            serde_json::from_value(value).map_err(|e| DatasetError::BadLine {
                line: line_no,
                message: e.to_string(),
            })?;
        out.push(env.record);
    }
    Ok(out)
}
