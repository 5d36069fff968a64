//! `manifest.json`: one per output directory, one entry appended per run.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Layout version of the CSV and JSON outputs. Bump when columns change.
pub const OUTPUT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub command: String,
    pub argv: Vec<String>,
    /// Fully resolved configuration of the run.
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Unix seconds.
    pub started: f64,
    pub finished: f64,
    pub verdict: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub runs: Vec<RunEntry>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema: OUTPUT_SCHEMA,
            runs: Vec::new(),
        }
    }
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(format!("{:x}", h.finalize()))
}

pub fn digests(paths: &[PathBuf]) -> std::io::Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Appends `entry` to the directory's manifest, creating it if needed.
/// Earlier entries are never rewritten.
pub fn append(dir: &Path, entry: RunEntry) -> Result<PathBuf, String> {
    let path = dir.join(MANIFEST_FILE);
    let mut m = if path.exists() {
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        serde_json::from_str::<RunManifest>(&text)
            .map_err(|e| format!("existing {} is not a run manifest: {e}", path.display()))?
    } else {
        RunManifest::default()
    };
    if m.schema != OUTPUT_SCHEMA {
        return Err(format!(
            "{} has output schema {}, this build writes {OUTPUT_SCHEMA}; use a fresh directory",
            path.display(),
            m.schema
        ));
    }
    m.runs.push(entry);
    let text = serde_json::to_string_pretty(&m).map_err(|e| e.to_string())?;
    fs::write(&path, text).map_err(|e| e.to_string())?;
    Ok(path)
}
