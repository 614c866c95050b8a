//! Canonical run provenance embedded in every artifact the CLI writes.
//!
//! JSON outputs carry the block under a top-level `provenance` key; binary
//! and CSV-directory outputs get a `<path>.provenance.json` sidecar. The
//! `args` map records every effective parameter after defaulting, so the
//! recorded configuration can be replayed verbatim. Replays reproduce
//! binary artifacts bit-exactly; JSON artifacts differ only in
//! `created_utc`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::errors::CliError;
use crate::util;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Canonical flag values after defaulting, keyed by long flag name.
    pub args: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// RFC 3339 UTC timestamp; informational only, excluded from all
    /// determinism guarantees.
    pub created_utc: String,
}

impl Provenance {
    pub fn new(command: &str, seed: Option<u64>, pairs: Vec<(&str, String)>) -> Self {
        Provenance {
            tool: "miep".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            seed,
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance always serializes")
    }

    /// Path of the sidecar carrying this block for a non-JSON artifact.
    pub fn sidecar_path(artifact: &Path) -> PathBuf {
        util::suffixed_path(artifact, "provenance.json")
    }

    /// Writes the sidecar next to `artifact`.
    pub fn write_sidecar(&self, artifact: &Path) -> Result<(), CliError> {
        util::write_json(&Self::sidecar_path(artifact), &self.to_value())
    }
}
