//! CSV tables and the set of files written by one run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// 17 significant digits in scientific notation, which round-trips every
/// f64 and does not depend on locale.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        let to_err = |e: csv::Error| CliError::numeric(format!("CSV serialization failed: {e}"));
        w.write_record(&self.header).map_err(to_err)?;
        for row in &self.rows {
            let fields = row.iter().map(|c| match c {
                Cell::Num(v) => format_number(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
            });
            w.write_record(fields).map_err(to_err)?;
        }
        w.into_inner()
            .map_err(|e| CliError::numeric(format!("CSV serialization failed: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// File name relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Files written so far by a run. Unless [`OutputSet::commit`] is called,
/// dropping the set deletes them again, along with the output directory if
/// the run created it.
pub struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<OutputFile>,
    committed: bool,
}

impl OutputSet {
    pub fn create(dir: &Path) -> CliResult<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_table(&mut self, name: &str, table: &CsvTable) -> CliResult<()> {
        self.write_bytes(name, &table.to_bytes()?)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        if self.files.iter().any(|f| f.name == name) {
            return Err(CliError::numeric(format!("output {name} written twice")));
        }
        let path = self.dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            let _ = fs::remove_file(&path);
            return Err(CliError::io(path, e));
        }
        self.files.push(OutputFile {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn commit(mut self) -> Vec<OutputFile> {
        self.committed = true;
        std::mem::take(&mut self.files)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(self.dir.join(&f.name));
        }
        if self.created_dir {
            // only succeeds if nothing else landed there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
