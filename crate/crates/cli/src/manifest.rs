//! Run manifests: every command records its resolved parameters, input
//! digests, and seed next to its artifacts, so a run can be reproduced
//! and outputs can be compared across runs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use spinchain_core::Result;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record for one command invocation. Two runs with the
/// same command, params, inputs, and seed produce bit-identical
/// artifacts; only `timestamp` differs between such runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, InputDigest>,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            params: BTreeMap::new(),
            inputs: BTreeMap::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Display) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.param("seed", seed);
    }

    pub fn input(&mut self, key: &str, path: &Path, bytes: &[u8]) {
        let digest = Sha256::digest(bytes);
        self.inputs.insert(
            key.to_string(),
            InputDigest {
                path: path.display().to_string(),
                sha256: hex::encode(digest),
            },
        );
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        write_json(&out_dir.join("manifest.json"), self)
    }
}

/// Serializes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
