//! Optional JSON configuration mirroring the command-line flags; explicit
//! flags win over config values.

use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lambda: Option<f64>,
    pub lambda_rel: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub out: Option<String>,
    pub points: Option<usize>,
    pub mu_max: Option<f64>,
    pub k: Option<f64>,
    pub samples: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_steps: Option<usize>,
    pub mu_min: Option<f64>,
    pub mu_max_grid: Option<f64>,
    pub mu_steps: Option<usize>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}
