use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty header")]
    EmptyHeader,
    #[error("table has no data rows")]
    NoRows,
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("malformed table: {0}")]
    Table(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("number of worlds must be positive")]
    NoWorlds,
    #[error("column `{column}` cannot hold {required} anchored values in {rows} rows")]
    AnchorOverflow { column: String, required: usize, rows: usize },
    #[error("answer is empty")]
    EmptyAnswer,
    #[error("no equivalence classes")]
    NoClasses,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Error {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn json(path: &Path, source: serde_json::Error) -> Error {
        Error::Json { path: path.to_path_buf(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
