//! Experiment configuration shared by every subcommand.
//!
//! A JSON file given with `--config` supplies defaults; command-line flags
//! override it key by key. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    /// Ball radius for infinite families, vertex count for `path`/`cycle`,
    /// declared truncation radius for loaded graphs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Output directory; not echoed into reports so that they stay
    /// identical across directories.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// Values set here win over those in `base`.
    pub fn over(mut self, base: ExperimentConfig) -> ExperimentConfig {
        let out = self.out.take().or(base.out.clone());
        let mut merged = serde_json::to_value(base).expect("config serializes");
        let top = serde_json::to_value(self).expect("config serializes");
        if let (Value::Object(m), Value::Object(t)) = (&mut merged, top) {
            m.extend(t);
        }
        let mut cfg: ExperimentConfig = serde_json::from_value(merged).expect("merged config is valid");
        cfg.out = out;
        cfg
    }

    /// Echo for reports.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("rate_tol", self.rate_tol),
            ("tau", self.tau),
            ("slack", self.slack),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(LabError::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(t) = self.time {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(LabError::Config(format!("time must be nonnegative, got {t}")));
            }
        }
        if let Some([a, b]) = self.window {
            if !(a < b) {
                return Err(LabError::Config(format!("window [{a}, {b}] is empty")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"family": "lattice_Z", "radius": 20, "tol": 1e-3}"#).unwrap();
        let flags = ExperimentConfig { radius: Some(50), ..Default::default() };
        let cfg = flags.over(file);
        assert_eq!(cfg.family.as_deref(), Some("lattice_Z"));
        assert_eq!(cfg.radius, Some(50));
        assert_eq!(cfg.tol, Some(1e-3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"radios": 3}"#).is_err());
    }

    #[test]
    fn out_dir_is_not_echoed() {
        let cfg = ExperimentConfig { out: Some("x".into()), seed: Some(7), ..Default::default() };
        assert_eq!(cfg.to_json(), serde_json::json!({ "seed": 7 }));
    }

    #[test]
    fn validation() {
        let bad = ExperimentConfig { tau: Some(0.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { window: Some([1.0, -1.0]), ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
