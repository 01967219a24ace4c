//! Optional TOML config file. Command-line flags take precedence over file
//! values, which take precedence over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub env_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub branching: Option<String>,
    pub roles: Option<String>,
    pub max_rounds: Option<u32>,
    pub allow_complete: Option<bool>,
    pub rollouts: Option<u32>,
    pub episodes: Option<u32>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon_start: Option<f64>,
    pub epsilon_end: Option<f64>,
    pub bind: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
