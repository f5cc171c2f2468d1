//! Reading samples from CSV or JSON-lines files.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use clap::ValueEnum;
use ptrdp_core::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// `.jsonl` / `.ndjson` are JSON-lines, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("jsonl" | "ndjson") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: cannot parse {content:?} as a number")]
    Parse { line: u64, content: String },
    #[error("line {line}: value is not finite")]
    NonFiniteValue { line: u64 },
    #[error("input has no data rows")]
    EmptyInput,
    #[error("CSV has {columns} columns and none is named \"value\"")]
    NoValueColumn { columns: usize },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

fn parse_cell(cell: &str, line: u64) -> Result<f64, IngestError> {
    let v: f64 = cell.trim().parse().map_err(|_| IngestError::Parse {
        line,
        content: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(IngestError::NonFiniteValue { line });
    }
    Ok(v)
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads the `value` column, or the only column. A single-column file whose
/// first cell is numeric is taken to have no header.
pub fn read_csv(path: &Path) -> Result<Vec<f64>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(open(path)?);
    let mut records = reader.records();
    let Some(first) = records.next() else {
        return Err(IngestError::EmptyInput);
    };
    let first = first?;
    let mut values = Vec::new();
    let column = match first.iter().position(|h| h.trim() == "value") {
        Some(i) => i,
        None if first.len() == 1 => {
            if first[0].trim().parse::<f64>().is_ok() {
                values.push(parse_cell(&first[0], 1)?);
            }
            0
        }
        None => return Err(IngestError::NoValueColumn { columns: first.len() }),
    };
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        values.push(parse_cell(&record[column], line)?);
    }
    Ok(values)
}

/// One number per line; blank lines are skipped. `{"value": x}` objects are
/// accepted as well.
pub fn read_jsonl(path: &Path) -> Result<Vec<f64>, IngestError> {
    let mut values = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parse_err = || IngestError::Parse {
            line: line_no,
            content: trimmed.to_string(),
        };
        let json: serde_json::Value = serde_json::from_str(trimmed).map_err(|_| parse_err())?;
        let v = match &json {
            serde_json::Value::Object(map) => map.get("value").and_then(serde_json::Value::as_f64),
            other => other.as_f64(),
        }
        .ok_or_else(parse_err)?;
        if !v.is_finite() {
            return Err(IngestError::NonFiniteValue { line: line_no });
        }
        values.push(v);
    }
    Ok(values)
}

/// Reads and validates a sample, reporting the row count on stderr.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Sample, IngestError> {
    let values = match format {
        InputFormat::Csv => read_csv(path)?,
        InputFormat::Jsonl => read_jsonl(path)?,
    };
    if values.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    eprintln!("ptrdp: read {} values from {}", values.len(), path.display());
    // Non-finite values were rejected above, so only emptiness could fail here.
    Sample::new(values).map_err(|_| IngestError::EmptyInput)
}
