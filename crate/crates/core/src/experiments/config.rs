use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelSpec, ProductMechanism};
use crate::error::{QldpError, Result};
use crate::manifold_opt::OptimizerConfig;
use crate::privacy_energy::ENTROPY_SLACK;
use crate::qldp_analyzer::PovmSearchConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    pub a: ChannelSpec,
    pub b: ChannelSpec,
}

impl MechanismSpec {
    pub fn block_depolarizing(beta_a: f64, beta_b: f64) -> Self {
        Self {
            a: ChannelSpec::BlockDepolarizing { beta: beta_a },
            b: ChannelSpec::BlockDepolarizing { beta: beta_b },
        }
    }

    pub fn build(&self) -> Result<ProductMechanism> {
        ProductMechanism::from_specs(&self.a, &self.b)
    }
}

/// Entropy levels: an explicit list or `count` evenly spaced points on
/// `[start, stop]` (both ends included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntropyGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl EntropyGrid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            EntropyGrid::List(ref v) => v.clone(),
            EntropyGrid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![start],
                n => (0..n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub csv: String,
    pub summary: String,
    pub plot: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            csv: "sweep.csv".into(),
            summary: "summary.json".into(),
            plot: "sweep.svg".into(),
        }
    }
}

/// Sweep configuration, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mechanism: MechanismSpec,
    pub s_grid: EntropyGrid,
    #[serde(default)]
    pub search: PovmSearchConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputPaths,
    /// Overrides both the search and optimizer seeds when present.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(mechanism: MechanismSpec, s_grid: EntropyGrid) -> Self {
        Self {
            mechanism,
            s_grid,
            search: PovmSearchConfig::default(),
            optimizer: OptimizerConfig::default(),
            output: OutputPaths::default(),
            seed: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QldpError::Config(format!("invalid run config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QldpError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn effective_search(&self) -> PovmSearchConfig {
        let mut c = self.search;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c
    }

    pub fn effective_optimizer(&self) -> OptimizerConfig {
        let mut c = self.optimizer;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c
    }

    /// Builds the mechanism and checks every entropy level against
    /// `[0, log N]`. Returns the mechanism and the clamped grid.
    pub fn validate(&self) -> Result<(ProductMechanism, Vec<f64>)> {
        self.search.validate()?;
        self.optimizer.validate()?;
        let mech = self.mechanism.build().map_err(|e| QldpError::Config(e.to_string()))?;
        let (da, db) = mech.dims();
        if da != db {
            return Err(QldpError::Config(format!(
                "subsystems must have equal dimension, got {da} and {db}"
            )));
        }
        let values = self.s_grid.values();
        if values.is_empty() {
            return Err(QldpError::Config("entropy grid is empty".into()));
        }
        let log_n = (da as f64).ln();
        let mut out = Vec::with_capacity(values.len());
        for s in values {
            if !s.is_finite() || s < 0.0 || s > log_n + ENTROPY_SLACK {
                return Err(QldpError::Config(format!("entropy level {s} outside [0, log {da}]")));
            }
            out.push(s.min(log_n));
        }
        Ok((mech, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_range_and_list_grids() {
        let cfg = RunConfig::from_json(
            r#"{"mechanism": {"a": {"kind": "block_depolarizing", "beta": 0.5},
                              "b": {"kind": "block_depolarizing", "beta": 0.5}},
                "s_grid": {"start": 0.0, "stop": 1.0, "count": 3}}"#,
        )
        .unwrap();
        assert_eq!(cfg.s_grid.values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.search, PovmSearchConfig::default());
        let cfg = RunConfig::from_json(
            r#"{"mechanism": {"a": {"kind": "identity", "dim": 2}, "b": {"kind": "identity", "dim": 2}},
                "s_grid": [0.1, 0.2], "seed": 9}"#,
        )
        .unwrap();
        assert_eq!(cfg.s_grid.values(), vec![0.1, 0.2]);
        assert_eq!(cfg.effective_search().seed, 9);
        assert_eq!(cfg.effective_optimizer().seed, 9);
    }

    #[test]
    fn rejects_bad_configs() {
        let mech = MechanismSpec::block_depolarizing(0.5, 0.5);
        assert!(RunConfig::new(mech.clone(), EntropyGrid::List(vec![])).validate().is_err());
        assert!(RunConfig::new(mech.clone(), EntropyGrid::List(vec![2.0])).validate().is_err());
        assert!(RunConfig::new(mech.clone(), EntropyGrid::List(vec![f64::NAN])).validate().is_err());
        assert!(RunConfig::new(MechanismSpec::block_depolarizing(1.5, 0.5), EntropyGrid::List(vec![0.1]))
            .validate()
            .is_err());
        let (_, grid) = RunConfig::new(mech, EntropyGrid::List(vec![4f64.ln() + 1e-13]))
            .validate()
            .unwrap();
        assert_eq!(grid, vec![4f64.ln()]);
        assert!(RunConfig::from_json(r#"{"mechanism": {}, "s_grid": [0.1]}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"mechanism": {"a": {"kind": "identity", "dim": 2}, "b": {"kind": "identity", "dim": 2}},
                "s_grid": [0.1], "extra": 1}"#
        )
        .is_err());
    }
}
