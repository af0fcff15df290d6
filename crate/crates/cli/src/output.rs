//! Outputs are rendered in memory and only land on disk once every file of
//! a command is ready; each file is written to a temporary sibling and
//! renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::CliError;

#[derive(Debug, Default)]
pub struct OutputBatch {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputBatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, contents: Vec<u8>) {
        self.files.push((path.into(), contents));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn commit(self) -> Result<(), CliError> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, contents) in &self.files {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
            let mut tmp = NamedTempFile::new_in(&dir)
                .map_err(|e| CliError::Data(format!("cannot stage {}: {e}", path.display())))?;
            tmp.write_all(contents)
                .and_then(|_| tmp.flush())
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path)
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}
