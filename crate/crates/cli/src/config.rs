//! TOML experiment files.
//!
//! The experiment fields sit at the top level, with `[believed]`,
//! `[realized]`, `[option]` and `[[strategies]]` tables. An optional
//! `[sweep]` table lists the realized up-factors and horizons to run:
//!
//! ```toml
//! steps = 300
//! paths = 500
//! seed = 42
//!
//! [believed]
//! u = 2.0
//! d = 0.5
//! p = 0.5
//! R = 1.05
//!
//! [realized]
//! u_m = 2.0
//! d_m = 0.5
//!
//! [option]
//! s0 = 100.0
//! k0 = 110.0
//!
//! [[strategies]]
//! kind = "ks"
//!
//! [[strategies]]
//! kind = "koc"
//! c1 = 0.0
//! c2 = 0.9
//! a = 0.5
//!
//! [sweep]
//! u_m = [1.2, 1.5, 2.0]
//! n = [5, 300]
//! ```

use std::fs;
use std::path::Path;

use anyhow::Context;
use kelly_opt::simulation::default_u_m_grid;
use kelly_opt::ExperimentConfig;
use serde::{Deserialize, Serialize};

/// Grid of realized up-factors and horizons for a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    /// Realized up-factors; the default grid is 1.1 to 3.0 in steps of 0.05.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_m: Option<Vec<f64>>,
    /// Horizons; defaults to the experiment's `steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
}

impl SweepGrid {
    fn is_empty(&self) -> bool {
        self.u_m.is_none() && self.n.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "SweepGrid::is_empty")]
    pub sweep: SweepGrid,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::from_toml(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.experiment.seed = seed;
        }
        if let Some(paths) = o.paths {
            self.experiment.paths = paths;
        }
        if let Some(steps) = o.steps {
            self.experiment.steps = steps;
            self.sweep.n = None;
        }
    }

    pub fn u_m_grid(&self) -> Vec<f64> {
        self.sweep.u_m.clone().unwrap_or_else(default_u_m_grid)
    }

    pub fn n_grid(&self) -> Vec<usize> {
        self.sweep
            .n
            .clone()
            .unwrap_or_else(|| vec![self.experiment.steps])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
steps = 300
paths = 500
seed = 42

[believed]
u = 2.0
d = 0.5
p = 0.5
R = 1.05

[realized]
u_m = 2.0
d_m = 0.5

[option]
s0 = 100.0
k0 = 110.0

[[strategies]]
kind = "ks"

[[strategies]]
kind = "ks"
f = 0.46

[[strategies]]
kind = "ko"
c = 0.0

[[strategies]]
kind = "koc"
c1 = 0.0
c2 = 0.9
a = 0.5

[[strategies]]
kind = "bond"

[sweep]
u_m = [1.2, 1.5]
n = [5, 300]
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = SweepConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.experiment.strategies.len(), 5);
        assert_eq!(cfg.n_grid(), vec![5, 300]);
        let again = SweepConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = SweepConfig::from_toml(SAMPLE).unwrap();
        cfg.apply(Overrides {
            seed: Some(7),
            paths: Some(10),
            steps: Some(20),
        });
        assert_eq!(cfg.experiment.seed, 7);
        assert_eq!(cfg.experiment.paths, 10);
        assert_eq!(cfg.n_grid(), vec![20]);
    }

    #[test]
    fn rejects_arbitrage_market() {
        let bad = SAMPLE.replace("d = 0.5\np", "d = 1.2\np");
        assert!(SweepConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn default_grid_when_absent() {
        let (head, _) = SAMPLE.split_once("[sweep]").unwrap();
        let cfg = SweepConfig::from_toml(head).unwrap();
        assert_eq!(cfg.u_m_grid().len(), 39);
        assert_eq!(cfg.n_grid(), vec![300]);
    }
}
