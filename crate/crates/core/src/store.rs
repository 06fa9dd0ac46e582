//! CSV-backed subscriber-profile store.
//!
//! The first line is the header; row ids are 0-based indices of the data
//! lines. Columns beyond the standard profile schema are kept verbatim.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// Standard profile columns.
pub const PROFILE_COLUMNS: [&str; 6] = [
    "subscriber_name",
    "imei",
    "sim",
    "la",
    "mobile",
    "bill_payment",
];

pub const DEFAULT_TABLE: &str = "SUBSCRIBER_PROFILE";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("missing header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("duplicate column {0:?}")]
    DuplicateColumn(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Column names compare case-insensitively, ignoring a trailing `#`.
pub fn normalize_column(name: &str) -> String {
    name.trim().trim_end_matches('#').to_ascii_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Text,
    /// No nonempty cells.
    Empty,
}

/// Parses a cell as a finite number.
pub fn parse_number(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubscriberStore {
    table: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl SubscriberStore {
    pub fn new(
        table: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self, StoreError> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i]
                .iter()
                .any(|o| normalize_column(o) == normalize_column(c))
            {
                return Err(StoreError::DuplicateColumn(c.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != columns.len() {
                return Err(StoreError::Malformed {
                    line: i as u64 + 2,
                    message: format!("expected {} fields, found {}", columns.len(), r.len()),
                });
            }
        }
        Ok(Self {
            table: table.into(),
            columns,
            rows,
        })
    }

    pub fn from_reader<R: Read>(reader: R, table: &str) -> Result<Self, StoreError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            None => return Err(StoreError::MissingHeader),
            Some(r) => r.map_err(csv_error)?,
        };
        let columns: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
        if columns.iter().all(|c| c.is_empty()) {
            return Err(StoreError::MissingHeader);
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() == 1 && rec.get(0) == Some("") {
                // blank line
                continue;
            }
            if rec.len() != columns.len() {
                return Err(StoreError::Malformed {
                    line,
                    message: format!("expected {} fields, found {}", columns.len(), rec.len()),
                });
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Self::new(table, columns, rows)
    }

    pub fn load(path: &Path, table: &str) -> Result<Self, StoreError> {
        Self::from_reader(File::open(path)?, table)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), StoreError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns).map_err(csv_error)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> &str {
        &self.table
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        let want = normalize_column(name);
        self.columns
            .iter()
            .position(|c| normalize_column(c) == want)
    }

    pub fn cell(&self, row: usize, col: usize) -> &str {
        &self.rows[row][col]
    }

    pub fn column_kind(&self, col: usize) -> ColumnKind {
        let mut any = false;
        for r in &self.rows {
            let cell = r[col].trim();
            if cell.is_empty() {
                continue;
            }
            any = true;
            if parse_number(cell).is_none() {
                return ColumnKind::Text;
            }
        }
        if any {
            ColumnKind::Numeric
        } else {
            ColumnKind::Empty
        }
    }

    /// Standard profile columns absent from the header.
    pub fn missing_profile_columns(&self) -> Vec<&'static str> {
        PROFILE_COLUMNS
            .iter()
            .copied()
            .filter(|c| self.column_index(c).is_none())
            .collect()
    }
}

fn csv_error(e: csv::Error) -> StoreError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => StoreError::Io(io),
        kind => StoreError::Malformed {
            line,
            message: format!("{kind:?}"),
        },
    }
}
