//! Experiment configuration: one JSON file, every field optional, CLI flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gamma: Option<f64>,
    pub s: Option<u32>,
    pub strip: Option<[f64; 2]>,
    pub cutoff: Option<f64>,
    pub cutoffs: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub n_cap: Option<u64>,
    pub b0: Option<f64>,
    pub epsilon: Option<f64>,
    pub h: Option<Vec<f64>>,
    pub horizons: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Shallow checks; module preconditions are enforced again at dispatch.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(g) = self.gamma {
            if !(g >= 1.0) {
                return Err(CliError::Config(format!("gamma = {g} must be >= 1")));
            }
        }
        if let Some([a1, a2]) = self.strip {
            if !(a2 > a1) {
                return Err(CliError::Config(format!("strip [{a1}, {a2}] is empty")));
            }
        }
        for (name, list) in [("cutoffs", &self.cutoffs), ("h", &self.h), ("horizons", &self.horizons)] {
            if let Some(v) = list {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(CliError::Config(format!("{name} must be a nonempty list of positive numbers")));
                }
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok(())
    }
}

/// Flag value, else config value, else default.
pub fn pick<T: Clone>(flag: Option<T>, config: &Option<T>, default: T) -> T {
    flag.or_else(|| config.clone()).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        assert_eq!(pick(Some(2.0), &Some(3.0), 1.0), 2.0);
        assert_eq!(pick(None, &Some(3.0), 1.0), 3.0);
        assert_eq!(pick(None, &None, 1.0), 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = ExperimentConfig {
            gamma: Some(0.5),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            h: Some(vec![]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"gamma": 1, "bogus": 2}"#).is_err());
    }
}
