//! Output staging: artifacts are built in memory, written to temporary files
//! inside the output directory, and only renamed into place once every one of
//! them was written.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::commands::CliError;

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(bytes).map_err(io)?;
            tmp.flush().map_err(io)?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| io(e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}
