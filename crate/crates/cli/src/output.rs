//! Artifact writing. Every file is staged in a temporary file next to its
//! destination and renamed into place.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use schro_core::spectral::io;
use schro_core::SpectralField;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_with(&self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let dest = self.root.join(name);
        let dir = dest.parent().unwrap_or(&self.root);
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut tmp = staging_file(dir).with_context(|| format!("cannot stage {}", dest.display()))?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            fill(&mut buf)?;
            buf.flush()?;
        }
        tmp.persist(&dest)
            .with_context(|| format!("cannot write {}", dest.display()))?;
        Ok(dest)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        self.write_with(name, |w| Ok(w.write_all(bytes)?))
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_csv(&self, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<PathBuf> {
        let mut text = String::new();
        text.push_str(header);
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(text, "{}", cells.join(","))?;
        }
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_field(&self, name: &str, field: &SpectralField) -> Result<PathBuf> {
        self.write_with(name, |w| Ok(io::write_csv(field, w)?))
    }
}

#[cfg(unix)]
fn staging_file(dir: &Path) -> std::io::Result<tempfile::NamedTempFile> {
    use std::os::unix::fs::PermissionsExt;
    tempfile::Builder::new()
        .permissions(std::fs::Permissions::from_mode(0o644))
        .tempfile_in(dir)
}

#[cfg(not(unix))]
fn staging_file(dir: &Path) -> std::io::Result<tempfile::NamedTempFile> {
    tempfile::NamedTempFile::new_in(dir)
}

/// File-name-safe rendering of a time value.
pub fn time_tag(t: f64) -> String {
    format!("{t:.6}").replace('-', "m").replace('.', "p")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        let r = out.write_with("sub/report.json", |w| {
            w.write_all(b"{\"partial\":")?;
            anyhow::bail!("interrupted")
        });
        assert!(r.is_err());
        assert!(!dir.path().join("sub/report.json").exists());
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 0);
        out.write_csv("n.csv", "t,v", [vec![0.0, 1.5]]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("n.csv")).unwrap();
        assert_eq!(text, "t,v\n0.0000000000000000e0,1.5000000000000000e0\n");
        assert_eq!(time_tag(-0.25), "m0p250000");
    }
}
