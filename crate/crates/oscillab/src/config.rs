//! JSON experiment configuration. The file mirrors [`ExperimentConfig`]
//! field for field; anything omitted falls back to the experiment's
//! canonical defaults. Numeric knobs (gate bounds, trial counts, ladder
//! endpoints) are overridable through the `tolerances` map so a smoke run
//! can shrink an experiment without touching code.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use oscillab_core::grid::GridSpec;
use serde::{Deserialize, Serialize};

pub const EXPERIMENTS: [&str; 7] = [
    "bmo-counterexample",
    "lp-counterexample",
    "fourier-series",
    "sweep",
    "composition",
    "kernel-check",
    "carleson-check",
];

/// Base grid of the experiment; individual runs may rescale the point
/// count through `resolutions`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
}

impl GridConfig {
    pub fn spec(&self) -> anyhow::Result<GridSpec> {
        GridSpec::new(self.dim, self.points_per_axis, self.period)
            .map_err(|e| anyhow::anyhow!("bad grid config: {e}"))
    }

    pub fn spec_at(&self, points_per_axis: usize) -> anyhow::Result<GridSpec> {
        GridSpec::new(self.dim, points_per_axis, self.period)
            .map_err(|e| anyhow::anyhow!("bad grid config: {e}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub grid: GridConfig,
    /// Ascending powers of two; the per-run point counts.
    #[serde(default)]
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Named numeric overrides for gate bounds and sampling knobs.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Report directory; `None` means `./reports`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
        let text =
            fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parse {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            bail!(
                "unknown experiment '{}'; expected one of {:?}",
                self.experiment,
                EXPERIMENTS
            );
        }
        self.grid.spec()?;
        let mut last = 0usize;
        for &r in &self.resolutions {
            if !r.is_power_of_two() || r < 16 {
                bail!("resolution {r} must be a power of two >= 16");
            }
            if r <= last {
                bail!("resolutions must be strictly ascending");
            }
            last = r;
        }
        Ok(())
    }

    /// Numeric knob with fallback.
    pub fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("reports"))
    }

    /// Canonical configuration for a named experiment. These carry the
    /// sizes the acceptance gates were calibrated at; smoke runs shrink
    /// them through a config file.
    pub fn default_for(name: &str) -> anyhow::Result<ExperimentConfig> {
        let cfg = match name {
            "bmo-counterexample" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 1 << 14,
                    period: 16.0 * std::f64::consts::PI,
                },
                resolutions: vec![1 << 10, 1 << 12, 1 << 14],
                seed: 7,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            "lp-counterexample" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 1 << 22,
                    period: 8.0,
                },
                resolutions: vec![1 << 22],
                seed: 7,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            "fourier-series" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 256,
                    period: 16.0,
                },
                resolutions: vec![256],
                seed: 11,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            "sweep" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 1 << 12,
                    period: 16.0,
                },
                resolutions: vec![1 << 8, 1 << 10, 1 << 12],
                seed: 7,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            "composition" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 2048,
                    period: 8.0,
                },
                resolutions: vec![2048],
                seed: 7,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            "kernel-check" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 4096,
                    period: 16.0,
                },
                resolutions: vec![512, 1024],
                seed: 7,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            "carleson-check" => ExperimentConfig {
                experiment: name.into(),
                grid: GridConfig {
                    dim: 1,
                    points_per_axis: 256,
                    period: 16.0,
                },
                resolutions: vec![256],
                seed: 7,
                tolerances: BTreeMap::new(),
                out_dir: None,
            },
            other => bail!("unknown experiment '{other}'"),
        };
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for name in EXPERIMENTS {
            let cfg = ExperimentConfig::default_for(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.experiment, name);
        }
    }

    #[test]
    fn validation_rejects_bad_ladders() {
        let mut cfg = ExperimentConfig::default_for("sweep").unwrap();
        cfg.resolutions = vec![256, 256];
        assert!(cfg.validate().is_err());
        cfg.resolutions = vec![100];
        assert!(cfg.validate().is_err());
        cfg.resolutions = vec![1024, 256];
        assert!(cfg.validate().is_err());
        cfg.experiment = "nope".into();
        cfg.resolutions = vec![256];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = ExperimentConfig::default_for("kernel-check").unwrap();
        cfg.tolerances.insert("drift_bound".into(), 1.25);
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.tol("drift_bound", 9.9), 1.25);
        assert_eq!(back.tol("missing", 9.9), 9.9);
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let s = r#"{"experiment":"sweep","grid":{"dim":1,"points_per_axis":256,"period":16.0}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(s).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 0);
        assert!(cfg.resolutions.is_empty());
        assert_eq!(cfg.out_dir(), PathBuf::from("reports"));
    }
}
