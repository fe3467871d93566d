//! Run manifest: config echo, seeds, and a checksummed file inventory.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Written as `manifest.json` next to the data files. Timestamps aside,
/// identical config and artifact version yield an identical inventory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub experiment: String,
    pub started_at: String,
    pub finished_at: String,
    /// Seeds actually used, after any override.
    pub seeds: Vec<u64>,
    /// Verbatim text of the config that produced the run.
    pub config: String,
    /// file name -> sha256 of its bytes; every data file appears exactly once.
    pub files: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
