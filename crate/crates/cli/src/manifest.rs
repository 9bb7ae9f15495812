//! Run manifests: every artifact a command writes is stamped with the
//! hash of the manifest that produced it, so any published number can be
//! re-derived from (command, config, master seed).

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::Regime;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub master_seed: u64,
    pub command: String,
    pub regime: String,
    pub out_dir: String,
    pub config_path: Option<String>,
}

impl RunManifest {
    pub fn new(master_seed: u64, command: &str, regime: Regime, out_dir: &Path) -> Self {
        RunManifest {
            master_seed,
            command: command.to_string(),
            regime: regime.label().to_string(),
            out_dir: out_dir.display().to_string(),
            config_path: None,
        }
    }

    pub fn with_config(mut self, config: Option<&Path>) -> Self {
        self.config_path = config.map(|p| p.display().to_string());
        self
    }

    pub fn sha256_hex(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("manifest serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Sidecar `<artifact>.manifest.json` for formats that cannot embed
    /// metadata (raw bit files).
    pub fn write_sidecar(&self, artifact: &Path) -> std::io::Result<()> {
        let mut path = artifact.as_os_str().to_owned();
        path.push(".manifest.json");
        let doc = serde_json::json!({
            "manifest": self,
            "manifest_sha256": self.sha256_hex(),
        });
        std::fs::write(path, serde_json::to_string_pretty(&doc).expect("json"))
    }

    /// Header record for JSONL artifacts.
    pub fn write_jsonl_header<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let doc = serde_json::json!({
            "manifest": self,
            "manifest_sha256": self.sha256_hex(),
        });
        writeln!(w, "{doc}")
    }
}
