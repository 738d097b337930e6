//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use pind_core::HardwareProfile;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub profile_sha256: String,
    pub master_seed: Option<u64>,
    pub version: &'static str,
    pub started: String,
    pub finished: Option<String>,
}

impl RunManifest {
    pub fn start(command: &str, hw: &HardwareProfile, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            profile_sha256: profile_hash(hw),
            master_seed: seed,
            version: env!("CARGO_PKG_VERSION"),
            started: chrono::Utc::now().to_rfc3339(),
            finished: None,
        }
    }

    pub fn finish(mut self) -> Self {
        self.finished = Some(chrono::Utc::now().to_rfc3339());
        self
    }
}

/// SHA-256 of the profile's canonical JSON form.
pub fn profile_hash(hw: &HardwareProfile) -> String {
    let json = serde_json::to_string(hw).expect("profile serializes");
    format!("{:x}", Sha256::digest(json.as_bytes()))
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// CSV with `rows` serialized by serde (header from field names).
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    write_atomic(path, &bytes)
}

/// Sidecar manifest for a non-JSON output file: `<file>.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_with_manifest(path: &Path, bytes: &[u8], manifest: &RunManifest) -> Result<()> {
    write_atomic(path, bytes)?;
    write_json(&manifest_path(path), manifest)
}

/// JSON document carrying the manifest next to the result.
#[derive(Serialize)]
pub struct WithManifest<'a, T: Serialize> {
    pub manifest: &'a RunManifest,
    pub result: &'a T,
}
