//! Background buffer load: the congestion field the routing strategies
//! must cope with.
//!
//! Real deployments carry traffic besides the measured workload, so each
//! node starts a run with part of its queue already occupied. Occupancy is
//! drawn from a smooth spatial field (a handful of congestion hotspots)
//! plus device-type and priority offsets, which makes queue pressure both
//! spatially clustered and correlated with observable features. Nodes whose
//! queues fill completely cannot accept relayed messages at all.
//!
//! The draw is a pure function of `(base_seed, scenario_id, device list)`,
//! so dataset extraction can rebuild the exact same occupancy from a hop
//! log plus its scenario files.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, salt};
use crate::scenario::{DeviceType, Scenario};

/// Shape of the background congestion field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CongestionConfig {
    /// Number of congestion hotspots per scenario.
    pub hotspot_count: usize,
    /// Spatial spread of each hotspot in meters.
    pub hotspot_sigma_m: f64,
    /// Peak load contribution of one hotspot, drawn uniformly per hotspot.
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    /// Additive load offsets per device type.
    pub type_offset_phone: f64,
    pub type_offset_sensor: f64,
    pub type_offset_relay: f64,
    /// Load reduction proportional to a device's priority tolerance.
    pub priority_relief: f64,
    /// Half-width of the uniform per-device noise term.
    pub noise: f64,
}

impl Default for CongestionConfig {
    fn default() -> Self {
        CongestionConfig {
            hotspot_count: 6,
            hotspot_sigma_m: 60.0,
            amplitude_min: 0.7,
            amplitude_max: 1.2,
            type_offset_phone: 0.0,
            type_offset_sensor: 0.15,
            type_offset_relay: -0.15,
            priority_relief: 0.1,
            noise: 0.1,
        }
    }
}

impl CongestionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hotspot_sigma_m <= 0.0 {
            return Err(Error::Config("hotspot_sigma_m must be positive".into()));
        }
        if self.amplitude_min > self.amplitude_max || self.amplitude_min < 0.0 {
            return Err(Error::Config("hotspot amplitude range invalid".into()));
        }
        if self.noise < 0.0 || self.priority_relief < 0.0 {
            return Err(Error::Config("noise and priority_relief must be >= 0".into()));
        }
        Ok(())
    }

    fn type_offset(&self, t: DeviceType) -> f64 {
        match t {
            DeviceType::Phone => self.type_offset_phone,
            DeviceType::Sensor => self.type_offset_sensor,
            DeviceType::Relay => self.type_offset_relay,
        }
    }
}

/// Initial `buffer_used` per device (scenario device order).
///
/// Hotspot centers are placed inside the bounding box of the device
/// positions, so the result depends only on the device list, the scenario
/// id and `base_seed` — never on how the scenario was obtained.
pub fn background_load(
    scenario: &Scenario,
    cfg: &CongestionConfig,
    base_seed: u64,
) -> Result<Vec<u32>> {
    cfg.validate()?;
    let mut rng = rng::stream(base_seed, salt::LOAD, scenario.scenario_id as u64);

    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for d in &scenario.devices {
        min_x = min_x.min(d.x_position);
        max_x = max_x.max(d.x_position);
        min_y = min_y.min(d.y_position);
        max_y = max_y.max(d.y_position);
    }

    let hotspots: Vec<(f64, f64, f64)> = (0..cfg.hotspot_count)
        .map(|_| {
            let x = min_x + rng.random::<f64>() * (max_x - min_x);
            let y = min_y + rng.random::<f64>() * (max_y - min_y);
            let amp = cfg.amplitude_min
                + rng.random::<f64>() * (cfg.amplitude_max - cfg.amplitude_min);
            (x, y, amp)
        })
        .collect();

    let two_sigma_sq = 2.0 * cfg.hotspot_sigma_m * cfg.hotspot_sigma_m;
    let used = scenario
        .devices
        .iter()
        .map(|d| {
            let field: f64 = hotspots
                .iter()
                .map(|&(hx, hy, amp)| {
                    let dx = d.x_position - hx;
                    let dy = d.y_position - hy;
                    amp * (-(dx * dx + dy * dy) / two_sigma_sq).exp()
                })
                .sum();
            let noise = (rng.random::<f64>() * 2.0 - 1.0) * cfg.noise;
            let ratio = (field + cfg.type_offset(d.device_type)
                - cfg.priority_relief * d.priority_tolerance
                + noise)
                .clamp(0.0, 1.0);
            ((ratio * d.buffer_capacity as f64).round() as u32).min(d.buffer_capacity)
        })
        .collect();
    Ok(used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate, ScenarioConfig};

    fn scenario() -> Scenario {
        let cfg = ScenarioConfig {
            seed: 9,
            node_count: 80,
            area_width: 400.0,
            area_height: 400.0,
            device_type_mix: [0.5, 0.3, 0.2],
            buffer_capacity_range: (10, 40),
        };
        generate(&cfg, 3).unwrap()
    }

    #[test]
    fn load_is_deterministic_and_bounded() {
        let s = scenario();
        let cfg = CongestionConfig::default();
        let a = background_load(&s, &cfg, 7).unwrap();
        let b = background_load(&s, &cfg, 7).unwrap();
        assert_eq!(a, b);
        for (used, d) in a.iter().zip(&s.devices) {
            assert!(*used <= d.buffer_capacity);
        }
    }

    #[test]
    fn different_scenario_ids_differ() {
        let s = scenario();
        let mut other = s.clone();
        other.scenario_id = 4;
        let cfg = CongestionConfig::default();
        let a = background_load(&s, &cfg, 7).unwrap();
        let b = background_load(&other, &cfg, 7).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn some_nodes_full_some_free_under_defaults() {
        let s = scenario();
        let used = background_load(&s, &CongestionConfig::default(), 7).unwrap();
        let full = used
            .iter()
            .zip(&s.devices)
            .filter(|(u, d)| **u >= d.buffer_capacity)
            .count();
        assert!(full > 0, "expected at least one congested node");
        assert!(full < s.devices.len(), "expected at least one free node");
    }
}
