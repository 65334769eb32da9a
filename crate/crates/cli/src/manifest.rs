use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::run::ChainInfo;

pub const FILE: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Truth and data only, from the `phantom` verb.
    Phantom,
    Incomplete,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub status: Status,
    pub version: String,
    pub seed: u64,
    pub chains: usize,
    /// `gaussian`, or `identity` when the kernel was too narrow for the grid.
    pub forward: String,
    pub noise_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything needed to rerun an output directory: `run --config
/// manifest.toml --out other` reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chain: Vec<ChainInfo>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(FILE);
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e))
    }
}
