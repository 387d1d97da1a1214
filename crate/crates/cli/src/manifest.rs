//! Run manifests: every command records the argument vector, seed, version,
//! and outputs needed to reproduce its artifacts byte-for-byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full process arguments (without the binary name); replaying them
    /// reproduces the outputs.
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_ms: u64,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    outputs: Vec<String>,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn output(mut self, name: &str) -> Self {
        self.outputs.push(name.into());
        self
    }

    /// Serialize to `<command>.manifest.json` inside `out_dir`.
    pub fn write(self, out_dir: &Path, start: Instant) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            argv: std::env::args().skip(1).collect(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.outputs,
            duration_ms: start.elapsed().as_millis() as u64,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let name = format!("{}.manifest.json", self.command);
        write_atomic(out_dir, &name, text.as_bytes())
    }
}

/// Write via a temporary file in the same directory, then rename into place.
pub fn write_atomic(out_dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let path = out_dir.join(name);
    let tmp = out_dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(path)
}
