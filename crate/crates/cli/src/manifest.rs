//! Run manifests.
//!
//! Every command writes `manifest.json` next to its outputs:
//!
//! ```json
//! {
//!   "command": {"name": "train", "args": {...}},
//!   "config_sha256": "...",
//!   "format": "idi-manifest",
//!   "inputs": {"/abs/path/train.csv": "<sha256>"},
//!   "outputs": {"model.json": "<sha256>", "training.txt": "<sha256>"},
//!   "seed": 1,
//!   "tool_version": "0.1.0",
//!   "version": "1.0"
//! }
//! ```
//!
//! Keys are sorted and nothing time-dependent is recorded, so a manifest is
//! itself reproducible. `idi rerun` replays `command` and checks the output
//! digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Invocation;
use crate::Failure;

pub const FILE: &str = "manifest.json";
pub const FORMAT: &str = "idi-manifest";
pub const MAJOR: u32 = 1;
const VERSION: &str = "1.0";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub tool_version: String,
    pub command: Invocation,
    pub seed: Option<u64>,
    pub config_sha256: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Output directory that remembers the digest of every file written to it.
pub struct Outputs {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            digests: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        let bytes = bytes.as_ref();
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        self.digests.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.digests.keys().map(String::as_str)
    }

    pub fn into_digests(self) -> BTreeMap<String, String> {
        self.digests
    }
}

impl Manifest {
    pub fn new(command: Invocation, seed: Option<u64>, inputs: &[PathBuf], config: Option<&Path>) -> Result<Self, Failure> {
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), file_sha256(p)?);
        }
        let config_sha256 = match config {
            Some(p) => Some(file_sha256(p)?),
            None => None,
        };
        Ok(Manifest {
            format: FORMAT.to_string(),
            version: VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            seed,
            config_sha256,
            inputs: digests,
            outputs: BTreeMap::new(),
        })
    }

    pub fn to_json(&self) -> Result<String, Failure> {
        // going through Value sorts every object's keys
        let v = serde_json::to_value(self).map_err(|e| Failure::data(e.to_string()))?;
        let mut s = serde_json::to_string_pretty(&v).map_err(|e| Failure::data(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        if v.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
            return Err(Failure::data(format!("{}: not an idi manifest", path.display())));
        }
        let version = v.get("version").and_then(|f| f.as_str()).unwrap_or("");
        let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
        if major != Some(MAJOR) {
            return Err(Failure::data(format!(
                "{}: unsupported manifest version `{version}`; this reader understands major version {MAJOR}",
                path.display()
            )));
        }
        serde_json::from_value(v).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }

    /// Input files whose content no longer matches the recorded digest.
    pub fn changed_inputs(&self) -> Vec<String> {
        self.inputs
            .iter()
            .filter(|(p, d)| file_sha256(Path::new(p)).map_or(true, |now| &now != *d))
            .map(|(p, _)| p.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_abc() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
