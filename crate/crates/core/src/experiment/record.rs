//! Run records: every experiment writes its artifacts into a fresh run
//! directory together with a manifest of content hashes, so a finished run
//! can be verified and reproduced byte-for-byte from its config and seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Snapshot of a completed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool_version: String,
    pub kind: String,
    pub seed: u64,
    /// Hash of the effective config text (after CLI overrides).
    pub config_hash: String,
    /// The effective config itself.
    pub config_snapshot: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Relative artifact path -> sha256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl RunRecord {
    /// Re-hash every artifact on disk and compare against the manifest.
    pub fn verify(&self, run_dir: &Path) -> Result<()> {
        for (rel, expected) in &self.artifacts {
            let bytes = std::fs::read(run_dir.join(rel))
                .map_err(|e| Error::Format(format!("{rel}: {e}")))?;
            let actual = sha256_hex(&bytes);
            if actual != *expected {
                return Err(Error::Format(format!(
                    "{rel}: hash mismatch (manifest {expected}, disk {actual})"
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunRecord> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Collects artifacts for one run directory and records their hashes.
pub struct RunWriter {
    dir: PathBuf,
    manifest: BTreeMap<String, String>,
}

impl RunWriter {
    pub fn create(dir: PathBuf) -> Result<Self> {
        if dir.exists() {
            return Err(Error::Config(format!(
                "run directory {} already exists; runs never overwrite",
                dir.display()
            )));
        }
        std::fs::create_dir_all(&dir)?;
        Ok(RunWriter {
            dir,
            manifest: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.manifest.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn write_png(&mut self, rel: &str, image: &crate::image::Image) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        image.save_png(&path)?;
        let bytes = std::fs::read(&path)?;
        self.manifest.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Register a file written directly into the run dir by other code.
    pub fn register(&mut self, rel: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(rel))?;
        self.manifest.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn manifest(&self) -> &BTreeMap<String, String> {
        &self.manifest
    }

    /// Write `run_record.json` and finish. The record file itself is not
    /// part of the manifest (it contains wall-clock timestamps).
    pub fn finalize(
        self,
        kind: &str,
        seed: u64,
        config_snapshot: &str,
        started_unix: u64,
    ) -> Result<RunRecord> {
        let record = RunRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.to_string(),
            seed,
            config_hash: sha256_hex(config_snapshot.as_bytes()),
            config_snapshot: config_snapshot.to_string(),
            started_unix,
            finished_unix: now_unix(),
            artifacts: self.manifest,
        };
        let text = serde_json::to_string_pretty(&record).expect("record serializes");
        std::fs::write(self.dir.join("run_record.json"), text)?;
        Ok(record)
    }
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
