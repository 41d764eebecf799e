use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tempfile::NamedTempFile;

/// Output directory with atomic (temp file + rename) writes.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<PathBuf> {
        let target = self.dir.join(name);
        let tmp = NamedTempFile::new_in(&self.dir).context("creating temporary file")?;
        {
            let mut out = BufWriter::new(tmp.as_file());
            fill(&mut out).with_context(|| format!("writing {}", target.display()))?;
            out.flush()?;
        }
        tmp.persist(&target).with_context(|| format!("renaming into {}", target.display()))?;
        self.written.push(name.to_string());
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}
