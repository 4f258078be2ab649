//! Run manifests, written next to every constructed artifact as
//! `<output>.manifest.json`.
//!
//! A manifest records the invocation, the resolved parameters, where each
//! ingredient came from (with a SHA-256 digest), every self-verification
//! verdict and the digest of each output file. `digest` covers all fields
//! except `timestamp` and itself, so two identical runs agree on it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::design::VerificationReport;
use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Builtin,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngredientRecord {
    pub role: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Digest of the file bytes, or of the canonical text for built-ins.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    pub parameters: Value,
    pub ingredients: Vec<IngredientRecord>,
    pub verification: Vec<CheckRecord>,
    pub outputs: Vec<OutputRecord>,
    #[serde(default)]
    pub digest: String,
    /// Seconds since the Unix epoch; excluded from `digest`.
    #[serde(default)]
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, argv: Vec<String>, parameters: Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            argv,
            parameters,
            ingredients: Vec::new(),
            verification: Vec::new(),
            outputs: Vec::new(),
            digest: String::new(),
            timestamp: 0,
        }
    }

    /// Digest of the manifest with `digest` and `timestamp` cleared.
    pub fn compute_digest(&self) -> String {
        let mut bare = self.clone();
        bare.digest.clear();
        bare.timestamp = 0;
        sha256_hex(serde_json::to_string(&bare).expect("plain data").as_bytes())
    }

    /// Fills in `digest` and stamps the current time.
    pub fn seal(&mut self) {
        self.digest = self.compute_digest();
        self.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn all_passed(&self) -> bool {
        self.verification.iter().all(|c| c.report.passed())
    }
}
