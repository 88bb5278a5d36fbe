//! Run manifest: what ran, with which inputs, producing which bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use relcov::config::RunConfig;
use relcov::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one tool invocation. Re-running the named subcommand with
/// the embedded config and seed reproduces every listed digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub seed: u64,
    pub version: String,
    pub duration_s: f64,
    pub config: RunConfig,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn collect(
        subcommand: &str,
        cfg: &RunConfig,
        seed: u64,
        duration_s: f64,
        out_dir: &Path,
        files: &[String],
    ) -> Result<Self> {
        let mut outputs = Vec::with_capacity(files.len());
        for file in files {
            let data = std::fs::read(out_dir.join(file))?;
            let mut hasher = Sha256::new();
            hasher.update(&data);
            outputs.push(OutputDigest {
                file: file.clone(),
                sha256: format!("{:x}", hasher.finalize()),
                bytes: data.len() as u64,
            });
        }
        Ok(Self {
            subcommand: subcommand.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_s,
            config: cfg.clone(),
            outputs,
        })
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let file = std::fs::File::create(out_dir.join(MANIFEST_FILE))?;
        relcov::emit::write_json(file, self)
    }
}
