//! Run configuration shared by the CLI and the verification suite.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probspace::DEFAULT_SOLVER_CAP;
use crate::state::DEFAULT_DENSE_CAP;

/// Environment variable naming a JSON config file.
pub const CONFIG_ENV_VAR: &str = "HOLISM_LAB_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("config file {path}: {message}")]
    File { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dense_cap: usize,
    pub solver_cap: usize,
    pub seed: u64,
    pub trials: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub format: OutputFormat,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dense_cap: DEFAULT_DENSE_CAP,
            solver_cap: DEFAULT_SOLVER_CAP,
            seed: 1,
            trials: 100_000,
            epsilon: 0.1,
            alpha: 0.01,
            format: OutputFormat::Json,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, message: &str| Err(ConfigError::Invalid { field, message: message.into() });
        if self.dense_cap == 0 {
            return invalid("dense_cap", "must be positive");
        }
        if self.solver_cap == 0 {
            return invalid("solver_cap", "must be positive");
        }
        if self.trials == 0 {
            return invalid("trials", "must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid("alpha", "must lie strictly between 0 and 1");
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return invalid("epsilon", "must be positive");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Config, ConfigError> {
        let config: Config = serde_json::from_str(text)
            .map_err(|e| ConfigError::File { path: "<inline>".into(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let file_err = |message: String| ConfigError::File { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        let config: Config = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Defaults, overridden by the file named in [`CONFIG_ENV_VAR`] if set.
    pub fn from_env() -> Result<Config, ConfigError> {
        match std::env::var_os(CONFIG_ENV_VAR) {
            Some(path) => Config::load(Path::new(&path)),
            None => Ok(Config::default()),
        }
    }
}
