//! Minimal single-writer CSV assembly.
//!
//! Every value written here is either a number formatted by
//! [`isopt_core::estimators::fmt_num`] or a short label, so a full CSV
//! library would add nothing; free-text fields go through [`csv_field`].

use std::path::Path;

use crate::harness::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    header: String,
    rows: Vec<String>,
}

impl CsvTable {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: String) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.header.len() + 64 * self.rows.len());
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render()).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }
}

/// Quotes a field when it contains a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
