//! Every file a subcommand produces goes through [`OutDir`], which only
//! accepts bare file names.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use needdesk_core::jsonl;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    /// Refers to `root` without creating it.
    pub fn unchecked(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of an output file, whether or not it exists yet.
    pub fn path(&self, name: &str) -> Result<PathBuf> {
        let p = Path::new(name);
        if name.is_empty() || p.components().count() != 1 || p.file_name().is_none() {
            bail!("output name `{name}` must be a plain file name");
        }
        Ok(self.root.join(p))
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name)?;
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, jsonl::to_pretty(value))
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, items: &[T]) -> Result<PathBuf> {
        let mut buf = Vec::new();
        jsonl::write(&mut buf, items)?;
        self.write(name, buf)
    }

    /// Writes `<stem>.json` and `<stem>.txt` and echoes the text.
    pub fn write_report<T: Serialize>(&self, stem: &str, value: &T, text: &str) -> Result<()> {
        self.write_json(&format!("{stem}.json"), value)?;
        self.write(&format!("{stem}.txt"), text)?;
        print!("{text}");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_cannot_escape_the_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        for bad in ["", "../x", "a/b", "/etc/passwd", ".."] {
            assert!(out.path(bad).is_err(), "{bad}");
        }
        assert_eq!(out.write("ok.txt", "hi").unwrap(), dir.path().join("ok.txt"));
    }
}
