//! Examples, run configuration, and file helpers shared by the front ends.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lf::{parse_form, LogicalForm};
use crate::rules::RuleSet;

/// One question over one table. `table` is resolved against the directory
/// of the examples file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub question: String,
    pub table: PathBuf,
    pub answer: Vec<String>,
}

/// Reads JSON-lines examples, skipping blank lines.
pub fn load_examples(path: &Path) -> Result<Vec<Example>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut ex: Example = serde_json::from_str(l).map_err(|e| Error::json(path, e))?;
            if ex.answer.is_empty() {
                return Err(Error::EmptyAnswer);
            }
            if ex.table.is_relative() {
                ex.table = base.join(&ex.table);
            }
            Ok(ex)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub s_max: usize,
    /// `None` is an unbounded beam.
    pub beam: Option<usize>,
    pub k: usize,
    pub l: usize,
    pub tolerance: usize,
    pub seed: u64,
    pub rules: RuleSet,
    pub cap: usize,
    pub jobs: usize,
    pub greedy: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            s_max: 7,
            beam: None,
            k: 30,
            l: 5,
            tolerance: 0,
            seed: 0,
            rules: RuleSet::default(),
            cap: crate::dpd::DEFAULT_CAP,
            jobs: 0,
            greedy: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_max == 0 {
            return Err(Error::Config("s-max must be positive".into()));
        }
        if self.beam == Some(0) {
            return Err(Error::Config("beam must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::NoWorlds);
        }
        if self.cap == 0 {
            return Err(Error::Config("cap must be positive".into()));
        }
        Ok(())
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// One canonical form per line.
pub fn forms_text(forms: &[LogicalForm]) -> String {
    forms.iter().map(|z| z.canonical_string() + "\n").collect()
}

pub fn read_forms(path: &Path) -> Result<Vec<LogicalForm>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    raw.lines().filter(|l| !l.trim().is_empty()).map(parse_form).collect()
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::json(path, e))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}
