//! JSON run configuration. Every field mirrors a command-line flag; flags take
//! precedence. Relative paths are resolved against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::failure::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<Vec<PathBuf>>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub grid: Option<String>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub standardize: Option<bool>,
    pub coefficient_scale: Option<String>,
    pub metric_mode: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub scenarios: Option<Vec<String>>,
    pub replicates: Option<usize>,
    pub n_test: Option<usize>,
    pub fixed_design: Option<bool>,
    pub methods: Option<Vec<String>>,
    pub model: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        cfg.data = cfg.data.map(|v| v.into_iter().map(rebase).collect());
        cfg.out = cfg.out.map(rebase);
        cfg.model = cfg.model.map(rebase);
        Ok(cfg)
    }
}
