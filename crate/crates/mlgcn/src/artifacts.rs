//! Output directories that are cleaned up unless the run commits them.

use std::fs;
use std::path::{Path, PathBuf};

use mlgcn_core::Tensor;

use crate::error::{io, Result};
use crate::matrix;

/// Tracks every file written under one directory.
///
/// Dropping without [`Artifacts::commit`] deletes those files, and the
/// directory too if this run created it.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(io(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// File names written so far, in order.
    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    fn track(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        path
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.track(name);
        fs::write(&path, text).map_err(io(&path))?;
        Ok(path)
    }

    pub fn write_tensor(&mut self, name: &str, tensor: &Tensor) -> Result<PathBuf> {
        let path = self.track(name);
        matrix::write_tensor(&path, tensor)?;
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, tensor: &Tensor) -> Result<PathBuf> {
        let path = self.track(name);
        matrix::write_csv(&path, tensor)?;
        Ok(path)
    }

    /// Keeps everything written; returns the file paths.
    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
