//! Delimited-text tables.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::normalize_entity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }

    /// Guesses the format from a file extension, defaulting to TSV.
    pub fn from_path(path: &Path) -> TableFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TableFormat::Csv,
            _ => TableFormat::Tsv,
        }
    }
}

/// A rectangular table of cell strings with a header row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub columns: Vec<String>,
    /// Row-major cells; every row has `columns.len()` entries.
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Builds a table from already-split cells, applying the same checks and
    /// header cleanup as [`parse_table`].
    pub fn new(id: impl Into<String>, columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Table> {
        if columns.is_empty() || columns.iter().all(|c| c.trim().is_empty()) {
            return Err(Error::EmptyHeader);
        }
        if rows.is_empty() {
            return Err(Error::NoRows);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::RaggedRow { row: i + 1, expected: columns.len(), found: row.len() });
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.trim().to_string()).collect())
            .collect();
        Ok(Table { id: id.into(), columns: dedup_columns(&columns), rows })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[j].as_str())
    }

    /// Serializes back to delimited text with a header row.
    pub fn to_delimited(&self, format: TableFormat) -> String {
        let mut w = csv::WriterBuilder::new().delimiter(format.delimiter()).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

/// Column names become unique after normalization: later duplicates get a
/// `_2`, `_3`, ... suffix. Blank names become `column<j>`.
fn dedup_columns(columns: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    columns
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let base = match c.trim() {
                "" => format!("column{j}"),
                t => t.to_string(),
            };
            let mut name = base.clone();
            let mut n = 2;
            while !seen.insert(normalize_entity(&name)) {
                name = format!("{base}_{n}");
                n += 1;
            }
            name
        })
        .collect()
}

/// Parses CSV or TSV text whose first record is the header.
pub fn parse_table(raw: &str, format: TableFormat, id: impl Into<String>) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .has_headers(false)
        .flexible(true)
        .from_reader(raw.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| Error::Table(e.to_string()))?,
        None => return Err(Error::EmptyHeader),
    };
    let columns: Vec<String> = header.iter().map(str::to_string).collect();
    let rows = records
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect::<Vec<_>>())
                .map_err(|e| Error::Table(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Table::new(id, columns, rows)
}

pub fn read_table(path: &Path) -> Result<Table> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
    parse_table(&raw, TableFormat::from_path(path), id)
}
