//! Run manifest: provenance record tying every emitted file to the config
//! that produced it. Re-running an identical config reproduces the data
//! files byte for byte; the manifest itself carries the timestamp.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub created: String,
    pub config_name: String,
    pub config_sha256: String,
    pub outputs: Vec<String>,
}

/// Output directory that records every file it writes.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// Write manifest.json listing every file emitted so far.
    pub fn finalize(mut self, config_name: &str, config_text: &str) -> std::io::Result<()> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created: chrono::Utc::now().to_rfc3339(),
            config_name: config_name.to_string(),
            config_sha256: hex_digest(config_text.as_bytes()),
            outputs: std::mem::take(&mut self.files),
        };
        let json = serde_json::to_vec_pretty(&manifest)?;
        fs::write(self.root.join("manifest.json"), json)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
