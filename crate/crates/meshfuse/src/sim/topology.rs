//! Static radio topology: which devices can hear each other.
//!
//! Nodes are stationary, so adjacency is computed once per scenario. The
//! builder buckets devices into a uniform grid with cell size equal to the
//! communication radius and only tests the 3x3 cell neighborhood per node;
//! tests cross-check it against a brute-force all-pairs scan.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::distance_to_target;
use crate::scenario::Scenario;

/// Sorted neighbor lists for every device in a scenario.
#[derive(Debug, Clone)]
pub struct Topology {
    ids: Vec<u32>,
    lists: Vec<Vec<u32>>,
    pub radius_m: f64,
}

impl Topology {
    pub fn build(scenario: &Scenario, radius_m: f64) -> Result<Topology> {
        if radius_m <= 0.0 {
            return Err(Error::Config(format!("radius_m must be positive, got {radius_m}")));
        }
        let devices = &scenario.devices;
        let cell = radius_m;
        let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);

        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, d) in devices.iter().enumerate() {
            grid.entry(key(d.x_position, d.y_position)).or_default().push(i);
        }

        let mut lists = vec![Vec::new(); devices.len()];
        for (i, d) in devices.iter().enumerate() {
            let (cx, cy) = key(d.x_position, d.y_position);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j == i {
                            continue;
                        }
                        let other = &devices[j];
                        // boundary inclusive
                        if distance_to_target(d.position(), other.position()) <= radius_m {
                            lists[i].push(other.device_id);
                        }
                    }
                }
            }
            lists[i].sort_unstable();
        }

        Ok(Topology {
            ids: devices.iter().map(|d| d.device_id).collect(),
            lists,
            radius_m,
        })
    }

    fn index_of(&self, id: u32) -> Result<usize> {
        self.ids
            .binary_search(&id)
            .map_err(|_| Error::UnknownDevice(id))
    }

    /// Neighbor ids of `id`, ascending.
    pub fn neighbors(&self, id: u32) -> Result<&[u32]> {
        Ok(&self.lists[self.index_of(id)?])
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }
}

/// Ids of all other devices within `radius_m` of `node_id`, ascending.
pub fn discover_neighbors(node_id: u32, scenario: &Scenario, radius_m: f64) -> Result<Vec<u32>> {
    let topo = Topology::build(scenario, radius_m)?;
    Ok(topo.neighbors(node_id)?.to_vec())
}
