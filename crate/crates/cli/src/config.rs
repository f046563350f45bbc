//! Run configuration. One TOML file drives every command; the `TRAJLENS_CONFIG`
//! environment variable overrides the path when no `--config` flag is given.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;
use trajlens_core::calibration::{CalibrationConfig, CalibrationMethod};
use trajlens_core::detectors::DetectorConfig;
use trajlens_core::scoring::ScoringConfig;

pub const CONFIG_ENV: &str = "TRAJLENS_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitRatios {
    pub dev: usize,
    pub cal: usize,
    pub eval: usize,
}

impl Default for SplitRatios {
    fn default() -> Self {
        // 40/20/40 in the reference protocol's proportions.
        Self {
            dev: 2,
            cal: 1,
            eval: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stage derives its own substream from it.
    pub seed: u64,
    /// Abort on the first per-item error instead of reporting and skipping.
    pub strict: bool,
    pub method: CalibrationMethod,
    /// Overrides `scoring.eta` when set.
    pub eta: Option<f64>,
    /// Overrides `scoring.theta_frag` when set.
    pub theta_frag: Option<f64>,
    pub detector: DetectorConfig,
    pub calibration: CalibrationConfig,
    pub scoring: ScoringConfig,
    pub split: SplitRatios,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            strict: false,
            method: CalibrationMethod::BetaSmoothed,
            eta: None,
            theta_frag: None,
            detector: DetectorConfig::default(),
            calibration: CalibrationConfig::default(),
            scoring: ScoringConfig::default(),
            split: SplitRatios::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.apply_overrides();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolve from an explicit flag, the environment, or defaults.
    pub fn resolve(flag: Option<&Path>) -> Result<Self, ConfigError> {
        match flag {
            Some(path) => Self::load(path),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(path) => Self::load(Path::new(&path)),
                None => {
                    let mut cfg = Self::default();
                    cfg.apply_overrides();
                    Ok(cfg)
                }
            },
        }
    }

    fn apply_overrides(&mut self) {
        if let Some(eta) = self.eta {
            self.scoring.eta = eta;
        }
        if let Some(theta) = self.theta_frag {
            self.scoring.theta_frag = theta;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.scoring.eta) {
            return Err(ConfigError::Invalid(format!(
                "eta must lie in [0, 1], got {}",
                self.scoring.eta
            )));
        }
        if self.calibration.delta_warning >= self.calibration.delta_error {
            return Err(ConfigError::Invalid(format!(
                "delta_warning {} must be below delta_error {}",
                self.calibration.delta_warning, self.calibration.delta_error
            )));
        }
        if self.split.dev + self.split.cal + self.split.eval == 0 {
            return Err(ConfigError::Invalid("split ratios are all zero".into()));
        }
        Ok(())
    }
}
