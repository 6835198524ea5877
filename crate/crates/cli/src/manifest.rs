use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Reproducibility record written next to every artifact. Only `timings`
/// varies between identical runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: BTreeMap<String, serde_json::Value>,
    pub config: Option<serde_json::Value>,
    /// SHA-256 of each input file, keyed by the path as given.
    pub input_hashes: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            args: BTreeMap::new(),
            config: None,
            input_hashes: BTreeMap::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn arg(&mut self, name: &str, value: impl Serialize) {
        self.args.insert(
            name.to_string(),
            serde_json::to_value(value).expect("argument serializes"),
        );
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.input_hashes.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(bytes)),
        );
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.insert(stage.to_string(), seconds);
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n")
    }
}

/// `<out>.manifest.json` unless a path is given.
pub fn manifest_path(explicit: Option<&Path>, out: &Path) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let mut s = out.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
    }
}
