// SPDX-License-Identifier: Apache-2.0

//! Run manifests: enough information to re-execute a command and check
//! that it reproduces the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::io::InputRecord;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command-line arguments after the program name.
    pub args: Vec<String>,
    pub inputs: Vec<InputRecord>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Where the output went (`None` for stdout) and its SHA-256.
    pub output: Option<PathBuf>,
    pub output_sha256: String,
}

impl RunManifest {
    pub fn now() -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }
}

/// Default manifest location next to an output file.
pub fn default_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
