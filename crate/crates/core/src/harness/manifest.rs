use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::LabeledImage;
use crate::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Hash of images (as stored bytes) and both labels, in order.
pub fn dataset_hash(items: &[LabeledImage]) -> String {
    let mut h = Sha256::new();
    for it in items {
        h.update(it.image.to_bytes());
        h.update([it.private_label as u8, it.public_label as u8]);
    }
    hex::encode(h.finalize())
}

/// Everything needed to rerun a command: configs, seeds and content hashes
/// of its inputs and outputs. `created_unix` is informational only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub catalog_hash: Option<String>,
    pub dataset_hash: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        let created_unix =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            catalog_hash: None,
            dataset_hash: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            created_unix,
        }
    }

    pub fn add_input(&mut self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        self.inputs.insert(name.into(), file_sha256(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        self.outputs.insert(name.into(), file_sha256(path)?);
        Ok(())
    }

    /// Hash of the manifest with the timestamp zeroed; equal digests mean
    /// the same configuration, inputs and outputs.
    pub fn digest(&self) -> String {
        let mut m = self.clone();
        m.created_unix = 0;
        sha256_hex(serde_json::to_string(&m).expect("manifest serializes").as_bytes())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timestamp_only() {
        let mut a = RunManifest::new("x", 1, serde_json::json!({"k": 1}));
        let mut b = a.clone();
        b.created_unix += 100;
        assert_eq!(a.digest(), b.digest());
        a.seed = 2;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn sha_of_empty() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
