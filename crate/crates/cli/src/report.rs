//! CSV tables with a leading metadata comment.

use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Index of the pass column, if the table carries checks.
    pub pass_column: Option<usize>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let pass_column = header.iter().position(|h| h == "pass");
        Self { file: file.to_string(), header, rows: Vec::new(), pass_column }
    }

    pub fn with_header(file: &str, header: Vec<String>) -> Self {
        let pass_column = header.iter().position(|h| h == "pass");
        Self { file: file.to_string(), header, rows: Vec::new(), pass_column }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "{}", self.file);
        self.rows.push(row);
    }

    pub fn failing_rows(&self) -> Vec<&Vec<String>> {
        match self.pass_column {
            Some(c) => self.rows.iter().filter(|r| r[c] != "true").collect(),
            None => Vec::new(),
        }
    }

    pub fn to_bytes(&self, seed: u64, config_hash: &str) -> std::io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# schema_version={SCHEMA_VERSION} seed={seed} config_hash={config_hash}")?;
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        drop(w);
        Ok(buf)
    }

    pub fn write(&self, dir: &Path, seed: u64, config_hash: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(&self.file), self.to_bytes(seed, config_hash)?)
    }
}

/// Shortest round-trip decimal, so output is stable across runs.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn flag(b: bool) -> String {
    b.to_string()
}
