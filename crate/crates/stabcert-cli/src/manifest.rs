//! Run manifest: every pipeline writes `manifest.json` recording the command,
//! a hash of its primary input, the seed and the artifact paths.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, input_bytes: &[u8], seed: u64, artifacts: Vec<String>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(input_bytes);
        let digest = hasher.finalize();
        let config_hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            command: command.to_string(),
            config_hash,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let json =
            serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        std::fs::write(out_dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}
