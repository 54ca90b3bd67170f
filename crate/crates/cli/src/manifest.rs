//! Run manifests: everything needed to rerun a command exactly.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const REPORT_FILE: &str = "report.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Simulate,
    PoissonTest,
    CltTest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: CommandKind,
    pub seed: u64,
    pub threads: Option<usize>,
    pub level: f64,
    pub tolerance_scale: f64,
    pub calibrate: bool,
    pub config_sha256: String,
    /// The configuration text, verbatim.
    pub config: String,
    pub records_sha256: Option<String>,
    pub passed: Option<bool>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let m: Manifest =
            serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))?;
        if sha256_hex(m.config.as_bytes()) != m.config_sha256 {
            bail!("config_sha256: embedded configuration does not match its recorded hash");
        }
        Ok(m)
    }
}
