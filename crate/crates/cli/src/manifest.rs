use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub wall_time: f64,
}

/// SHA-256 over the command line and the bytes of every input file, so that
/// equal hashes mean equal inputs.
pub fn config_hash(args: &[String], inputs: &[PathBuf]) -> String {
    let mut h = Sha256::new();
    for a in args {
        h.update(a.as_bytes());
        h.update([0]);
    }
    for p in inputs {
        h.update(p.to_string_lossy().as_bytes());
        h.update([0]);
        if let Ok(bytes) = std::fs::read(p) {
            h.update(&bytes);
        }
        h.update([0]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, seed: u64, wall: Duration) -> Self {
        RunManifest {
            command: command.to_string(),
            config_hash,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: wall.as_secs_f64(),
        }
    }
}

/// `report.json` → `report.manifest.json`, `traj.csv` → `traj.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}
