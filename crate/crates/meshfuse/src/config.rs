//! Top-level experiment configuration: one TOML file holding the scenario
//! suite definition, the simulation parameters and the fusion knobs, so a
//! full experiment is declared in one place.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, salt};
use crate::scenario::ScenarioConfig;
use crate::sim::SimulationConfig;
use crate::util::{read_to_string, write_atomic};

/// Shape of the generated scenario suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub scenario_count: u32,
    /// Node counts are spread evenly from min to max across the suite.
    pub node_count_min: usize,
    pub node_count_max: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub phone_fraction: f64,
    pub sensor_fraction: f64,
    pub relay_fraction: f64,
    pub buffer_capacity_min: u32,
    pub buffer_capacity_max: u32,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            scenario_count: 10,
            node_count_min: 40,
            node_count_max: 120,
            area_width: 400.0,
            area_height: 400.0,
            phone_fraction: 0.5,
            sensor_fraction: 0.3,
            relay_fraction: 0.2,
            buffer_capacity_min: 10,
            buffer_capacity_max: 40,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenario_count == 0 {
            return Err(Error::Config("scenario_count must be >= 1".into()));
        }
        if self.node_count_min < 2 || self.node_count_min > self.node_count_max {
            return Err(Error::Config("node count range invalid".into()));
        }
        // per-scenario checks run in ScenarioConfig::validate
        Ok(())
    }

    /// Per-scenario configs: ids 1..=N, node counts interpolated, seeds
    /// derived from the suite seed.
    pub fn scenario_configs(&self) -> Result<Vec<(u32, ScenarioConfig)>> {
        self.validate()?;
        let n = self.scenario_count;
        let span = (self.node_count_max - self.node_count_min) as f64;
        let mut out = Vec::with_capacity(n as usize);
        for i in 0..n {
            let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            let node_count = self.node_count_min + (span * frac).round() as usize;
            let cfg = ScenarioConfig {
                seed: rng::sub_seed(self.seed, salt::SCENARIO, i as u64),
                node_count,
                area_width: self.area_width,
                area_height: self.area_height,
                device_type_mix: [self.phone_fraction, self.sensor_fraction, self.relay_fraction],
                buffer_capacity_range: (self.buffer_capacity_min, self.buffer_capacity_max),
            };
            cfg.validate()?;
            out.push((i + 1, cfg));
        }
        Ok(out)
    }
}

/// Statistical-test knobs for strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonConfig {
    pub ci_level: f64,
    pub ci_resamples: usize,
    pub ci_seed: u64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig { ci_level: 0.95, ci_resamples: 10_000, ci_seed: 42 }
    }
}

/// The whole experiment: suite + simulation + training + comparison.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub suite: SuiteConfig,
    pub simulation: SimulationConfig,
    pub training: TrainingConfig,
    pub comparison: ComparisonConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { seed: 42 }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.suite.validate()?;
        self.simulation.validate()?;
        if !(0.0 < self.comparison.ci_level && self.comparison.ci_level < 1.0) {
            return Err(Error::Config("ci_level must be in (0,1)".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = read_to_string(path)?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        write_atomic(path, &text)
    }
}
