//! Run manifests: enough provenance to replay any run byte-for-byte.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written next to every file output. `argv` is the full argument vector
/// after the binary name; replaying it reproduces the primary outputs
/// byte-identically (the manifest's own timestamp is metadata, not output).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub unix_time: u64,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], seed: u64, inputs: &[PathBuf]) -> Self {
        let inputs = inputs
            .iter()
            .map(|p| InputDigest {
                path: p.display().to_string(),
                sha256: digest_file(p).unwrap_or_else(|_| "unreadable".into()),
            })
            .collect();
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            unix_time: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// `out.json` → `out.manifest.json` next to the output.
    pub fn path_for(out: &Path) -> PathBuf {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        out.with_file_name(format!("{stem}.manifest.json"))
    }

    pub fn write_next_to(&self, out: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("serializable manifest");
        text.push('\n');
        std::fs::write(Self::path_for(out), text).map_err(CliError::internal)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::usage)?;
        serde_json::from_str(&text).map_err(CliError::usage)
    }
}

fn digest_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
