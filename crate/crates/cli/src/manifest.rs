//! The run manifest: everything needed to replay a run bit-identically
//! (resolved config, effective seed, criteria), plus bookkeeping that is
//! not part of the replay contract (timings, output list, version).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    /// Effective search seed after any command-line override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resolved scenario config (design/sequential/efficiency commands).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ScenarioConfig>,
    /// Criterion sweep tokens actually run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<String>>,
    /// Arguments of a `scores` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ScoresManifest>,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, u128>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoresManifest {
    pub grid: usize,
    pub threshold: f64,
    pub actual: PathBuf,
    pub estimated: PathBuf,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{} is not a valid manifest: {e}", path.display()))
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}
