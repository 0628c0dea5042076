//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use anc_core::oracle::SearchConfig;
use anc_core::LayeredNetwork;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Subset,
    Sweep,
    Highsnr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: String,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.from + t * (self.to - self.from),
                    Scale::Log => (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp(),
                }
            })
            .collect()
    }
}

/// One δ or several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl DeltaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            DeltaSpec::One(d) => vec![*d],
            DeltaSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub network: LayeredNetwork,
    /// Registered scaling strategy for `solve` and the optimal sweep curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    /// 1-based relays of the snooped layer the eavesdropper hears in `solve`;
    /// the whole layer when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snooped: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<SearchConfig>,
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{}`: {}", key, msg))
}

impl ExperimentConfig {
    pub fn from_value(value: serde_json::Value) -> Result<Self, CliError> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                config_err(&path, inner)
            }
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn search_config(&self) -> SearchConfig {
        let mut cfg = self.oracle.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }

    /// Config-level invariants for `mode`.
    pub fn check(&self, mode: Mode) -> Result<(), CliError> {
        if let Some(cfg) = &self.oracle {
            cfg.validate().map_err(|e| config_err("oracle", e))?;
        }
        if let Some(d) = &self.delta {
            let v = d.values();
            if v.is_empty() {
                return Err(config_err("delta", "empty list"));
            }
            if let Some(bad) = v.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
                return Err(config_err(
                    "delta",
                    format!("must be finite and nonnegative, got {}", bad),
                ));
            }
        }
        match mode {
            Mode::Sweep => {
                let s = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| config_err("sweep", "required in sweep mode"))?;
                if s.variable != "P_s" {
                    return Err(config_err(
                        "sweep.variable",
                        format!("only \"P_s\" can be swept, got {:?}", s.variable),
                    ));
                }
                if s.points < 2 {
                    return Err(config_err("sweep.points", "at least 2 points required"));
                }
                if !(s.from > 0.0 && s.to > 0.0) || !s.from.is_finite() || !s.to.is_finite() {
                    return Err(config_err("sweep", "range must be positive and finite"));
                }
                if s.from >= s.to {
                    return Err(config_err(
                        "sweep",
                        format!("empty range: from = {} must be below to = {}", s.from, s.to),
                    ));
                }
            }
            Mode::Highsnr => {
                if self.delta.is_none() {
                    return Err(config_err("delta", "required in highsnr mode"));
                }
            }
            Mode::Solve | Mode::Subset => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG5A: &str = r#"{
        "mode": "sweep",
        "network": {
            "nodes_per_layer": [2, 2], "h_s": 0.689, "hops": [0.603], "h_t": 0.203,
            "h_e": 0.031, "snooped_layer": 2, "p_s": 1e6, "power": 500, "sigma2": 1
        },
        "sweep": {"variable": "P_s", "from": 1, "to": 1e6, "points": 61},
        "delta": 0.005
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(FIG5A).unwrap();
        assert_eq!(cfg.sweep.as_ref().unwrap().scale, Scale::Log);
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = FIG5A.replace("\"h_t\"", "\"h_tt\"");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("h_tt"), "{}", err);
    }

    #[test]
    fn wrong_type_names_path() {
        let text = FIG5A.replace("\"points\": 61", "\"points\": \"many\"");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("sweep.points"), "{}", err);
    }

    #[test]
    fn empty_sweep_range_rejected() {
        let text = FIG5A.replace("\"to\": 1e6", "\"to\": 1");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let err = cfg.check(Mode::Sweep).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("empty range"));
    }

    #[test]
    fn sweep_grid_endpoints() {
        let s = SweepSpec {
            variable: "P_s".into(),
            from: 1.0,
            to: 1e6,
            points: 61,
            scale: Scale::Log,
        };
        let v = s.values();
        assert_eq!(v.len(), 61);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[60] - 1e6).abs() < 1e-6);
        assert!((v[10] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn per_node_eavesdropper_list() {
        let text = FIG5A.replace("\"h_e\": 0.031", "\"h_e\": [0.1, 0.2]");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.network.h_e, anc_core::EveGains::PerNode(vec![0.1, 0.2]));
    }
}
