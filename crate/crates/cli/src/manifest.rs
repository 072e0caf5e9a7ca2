//! Run manifests.
//!
//! Every command that writes files also writes `<primary output>.manifest.json`
//! recording the invocation, the effective configuration, the seed and
//! fingerprints of the codes involved. Manifests hold no timestamps, so
//! re-running a command reproduces its manifest byte for byte.

use std::path::{Path, PathBuf};

use bpcodes::code::{save_dense, ParityCheck};
use bpcodes::Result;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Fingerprint {
    pub role: String,
    pub n: usize,
    pub checks: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub codes: Vec<Fingerprint>,
    pub outputs: Vec<PathBuf>,
    pub versions: Versions,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub bpcodes: &'static str,
    pub cli: &'static str,
}

/// SHA-256 of the dense text form of `code`.
pub fn fingerprint(role: &str, code: &ParityCheck) -> Fingerprint {
    let digest = Sha256::digest(save_dense(code).as_bytes());
    Fingerprint {
        role: role.to_string(),
        n: code.n(),
        checks: code.checks(),
        sha256: hex::encode(digest),
    }
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config,
            seed,
            codes: Vec::new(),
            outputs: Vec::new(),
            versions: Versions {
                bpcodes: bpcodes::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
        }
    }

    pub fn code(mut self, role: &str, code: &ParityCheck) -> Self {
        self.codes.push(fingerprint(role, code));
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Writes the manifest next to `primary` and returns its path.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf> {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}
