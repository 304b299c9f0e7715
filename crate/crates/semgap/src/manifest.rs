//! Run manifest: configuration snapshot, per-domain counts, compressor
//! identity and checksums of every artifact. Wall-clock timings live in a
//! separate file so that the manifest itself is reproducible.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS: &str = "timings.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config: serde_json::Value,
    /// Free-form per-stage facts (record counts, codec identity, ...).
    pub stages: BTreeMap<String, serde_json::Value>,
    /// Relative path to hex SHA-256, for every file under the output
    /// directory except the manifest and the timings.
    pub checksums: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(Error::io(path))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(Error::io(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(Error::io(dir))? {
        let entry = entry.map_err(Error::io(dir))?;
        let path = entry.path();
        if entry.file_type().map_err(Error::io(&path))?.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("walk stays under root").to_path_buf());
        }
    }
    Ok(())
}

fn relative_key(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Checksums of all artifacts under `out`.
pub fn checksum_tree(out: &Path) -> Result<BTreeMap<String, String>> {
    let mut files = Vec::new();
    collect_files(out, out, &mut files)?;
    let mut sums = BTreeMap::new();
    for rel in files {
        let key = relative_key(&rel);
        if key == MANIFEST || key == TIMINGS || key.ends_with(".tmp") {
            continue;
        }
        sums.insert(key, sha256_file(&out.join(&rel))?);
    }
    Ok(sums)
}

impl Manifest {
    pub fn load_or_new(out: &Path) -> Result<Self> {
        let path = out.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest {
                tool: format!("semgap {}", env!("CARGO_PKG_VERSION")),
                ..Default::default()
            });
        }
        let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
        serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }

    /// Refreshes the checksums and writes the manifest.
    pub fn save(&mut self, out: &Path) -> Result<()> {
        self.checksums = checksum_tree(out)?;
        crate::report::write_json(&out.join(MANIFEST), self)
    }

    /// Files whose current content differs from the recorded checksum, plus
    /// recorded files that are gone.
    pub fn verify(&self, out: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (rel, sum) in &self.checksums {
            let p = out.join(rel);
            if !p.exists() || sha256_file(&p)? != *sum {
                bad.push(rel.clone());
            }
        }
        Ok(bad)
    }
}

/// Seconds per stage, appended to across commands.
pub fn record_timing(out: &Path, stage: &str, seconds: f64) -> Result<()> {
    let path = out.join(TIMINGS);
    let mut timings: BTreeMap<String, f64> = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => BTreeMap::new(),
    };
    timings.insert(stage.into(), seconds);
    crate::report::write_json(&path, &timings)
}
