//! CSV output: comma-separated, LF line endings, mandatory header, every
//! numeric column named with a unit suffix. Files are written atomically.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Column unit suffixes. `_n` marks a count or index, `_1` a dimensionless
/// ratio.
pub const UNIT_SUFFIXES: &[&str] = &["_V", "_A", "_uA", "_S", "_uS", "_ohm", "_kohm", "_s", "_n", "_1", "_bits"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

/// Shortest representation that parses back to the same value; negative
/// zero prints as `0`.
pub fn num(x: f64) -> String {
    format!("{}", x + 0.0)
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

pub fn us(g: f64) -> String {
    num(g * 1e6)
}

pub fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// Writes `bytes` to a temporary sibling of `path` and renames it in place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn write_table(dir: &Path, name: &str, table: &Table) -> Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, &table.to_bytes()?)?;
    Ok(path)
}
