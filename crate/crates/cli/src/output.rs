//! Output directory handling, CSV formatting and the checksum manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, FileEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path,
            message: e.to_string(),
        })
    }

    /// Names of listed files that are missing from `dir` or differ from their
    /// recorded checksum.
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(name, entry)| match std::fs::read(dir.join(name)) {
                Ok(bytes) => sha256_hex(&bytes) != entry.sha256,
                Err(_) => true,
            })
            .map(|(name, _)| name.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one run; [`OutputDir::finish`] writes the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::io(format!("cannot create output directory {}", root.display()), e))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: Manifest::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write `name` (relative, `/`-separated) and record its checksum.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}", parent.display()), e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        self.manifest.files.insert(
            name.to_string(),
            FileEntry {
                sha256: sha256_hex(contents),
                bytes: contents.len() as u64,
            },
        );
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(mut self) -> CliResult<Manifest> {
        let manifest = std::mem::take(&mut self.manifest);
        self.write_json(MANIFEST, &manifest)?;
        Ok(manifest)
    }
}

/// Numeric CSV cell; missing values are left blank.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

/// One trajectory row; `None` marks an observable that was not computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Row {
    pub t: f64,
    pub n: Option<f64>,
    pub fano: Option<f64>,
    pub z: Option<f64>,
    pub s: Option<f64>,
    pub x: Option<Complex64>,
    pub log_negativity: Option<f64>,
}

pub const TRAJECTORY_HEADER: &str = "t,n,fano,z,s,re_x,im_x,E_N";

pub fn trajectory_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(rows.len() * 160);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [
            cell(Some(r.t)),
            cell(r.n),
            cell(r.fano),
            cell(r.z),
            cell(r.s),
            cell(r.x.map(|z| z.re)),
            cell(r.x.map(|z| z.im)),
            cell(r.log_negativity),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Wigner function in long format under a `#` metadata header.
pub fn wigner_csv(meta: &[(&str, String)], grid: &dicke_core::observables::WignerGrid) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push_str("re,im,W\n");
    for (i, &im) in grid.im.iter().enumerate() {
        for (j, &re) in grid.re.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", cell(Some(re)), cell(Some(im)), cell(Some(grid.values[(i, j)])));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_and_rows() {
        assert_eq!(cell(None), "");
        assert_eq!(cell(Some(1.5)), "1.5000000000000000e0");
        let row = Row {
            t: 0.0,
            n: Some(2.0),
            x: Some(Complex64::new(0.0, -1.0)),
            ..Default::default()
        };
        let csv = trajectory_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), 8);
        assert!(line.ends_with(",-1.0000000000000000e0,"), "{line}");
        assert_eq!(line.split(',').nth(2), Some(""));
    }

    #[test]
    fn manifest_tracks_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.txt", b"hello").unwrap();
        out.write("sub/b.txt", b"world").unwrap();
        let manifest = out.finish().unwrap();
        assert_eq!(manifest.files.len(), 2);
        assert_eq!(
            manifest.files["a.txt"].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        let loaded = Manifest::load(dir.path()).unwrap();
        assert_eq!(loaded, manifest);
        assert!(loaded.mismatches(dir.path()).is_empty());
        std::fs::write(dir.path().join("sub/b.txt"), b"w0rld").unwrap();
        assert_eq!(loaded.mismatches(dir.path()), vec!["sub/b.txt".to_string()]);
    }
}
