//! The eight per-candidate routing features and the min-max normalizer.
//!
//! All computations here are pure; the simulator assembles a
//! [`FeatureVector`] per forwarding candidate at every hop, and the same
//! functions are reused when training datasets are rebuilt from hop logs.

use crate::error::{Error, Result};
use crate::scenario::DeviceType;

/// Column names, in the fixed order used by dataset files and model inputs.
pub const FEATURE_NAMES: [&str; 8] = [
    "ttl_left",
    "hop_count",
    "distance_to_target",
    "success_rate_origin",
    "priority_tolerance",
    "uptime_ratio",
    "buffer_ratio",
    "device_type_encoded",
];

/// The eight features describing one forwarding candidate at one hop.
///
/// `success_rate_origin` and `uptime_ratio` describe the node currently
/// holding the message; the remaining per-node fields describe the
/// candidate itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub ttl_left: u32,
    pub hop_count: u32,
    pub distance_to_target: f64,
    pub success_rate_origin: f64,
    pub priority_tolerance: f64,
    pub uptime_ratio: f64,
    pub buffer_ratio: f64,
    pub device_type_encoded: u8,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; 8] {
        [
            self.ttl_left as f64,
            self.hop_count as f64,
            self.distance_to_target,
            self.success_rate_origin,
            self.priority_tolerance,
            self.uptime_ratio,
            self.buffer_ratio,
            self.device_type_encoded as f64,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = [
            self.success_rate_origin,
            self.priority_tolerance,
            self.uptime_ratio,
            self.buffer_ratio,
        ];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Data(format!("feature fraction outside [0,1]: {self:?}")));
        }
        if self.distance_to_target < 0.0 || !self.distance_to_target.is_finite() {
            return Err(Error::Data("distance_to_target must be finite and >= 0".into()));
        }
        if self.device_type_encoded > 2 {
            return Err(Error::Data("device_type_encoded must be 0, 1 or 2".into()));
        }
        Ok(())
    }
}

/// Remaining hop budget. Panics if `hop_count` exceeds `ttl_initial`; that
/// is a caller contract violation, not a data condition.
pub fn ttl_left(ttl_initial: u32, hop_count: u32) -> u32 {
    assert!(
        hop_count <= ttl_initial,
        "hop_count {hop_count} exceeds ttl_initial {ttl_initial}"
    );
    ttl_initial - hop_count
}

/// Euclidean distance between a candidate and the intended recipient.
pub fn distance_to_target(neighbor_pos: (f64, f64), receiver_pos: (f64, f64)) -> f64 {
    let dx = receiver_pos.0 - neighbor_pos.0;
    let dy = receiver_pos.1 - neighbor_pos.1;
    (dx * dx + dy * dy).sqrt()
}

/// Historical delivery success of a node: `succeeded / attempted`, falling
/// back to the scenario prior before any attempt exists.
pub fn success_rate(succeeded: f64, attempted: f64, prior: f64) -> f64 {
    debug_assert!(succeeded <= attempted, "succeeded > attempted");
    if attempted == 0.0 {
        prior
    } else {
        succeeded / attempted
    }
}

/// Operational availability: `active / total`, the scenario prior when no
/// time has elapsed yet.
pub fn uptime_ratio(active_s: f64, total_s: f64, prior: f64) -> f64 {
    debug_assert!(active_s <= total_s, "active time exceeds total time");
    if total_s == 0.0 {
        prior
    } else {
        active_s / total_s
    }
}

/// Relative load on a node's message queue.
pub fn buffer_ratio(used: u32, capacity: u32) -> f64 {
    assert!(capacity >= 1, "buffer capacity must be >= 1");
    assert!(used <= capacity, "buffer_used {used} exceeds capacity {capacity}");
    used as f64 / capacity as f64
}

/// Ordinal encoding of the device type (phone 0, relay 1, sensor 2).
pub fn encode_device_type(t: DeviceType) -> u8 {
    t.ordinal()
}

/// Min-max feature scaler fitted on a training set; used only by the
/// forwarder classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl Normalizer {
    /// Fits per-feature minima and maxima. Errors on an empty dataset.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| {
            Error::Data("cannot fit a normalizer on an empty dataset".into())
        })?;
        let width = first.len();
        let mut mins = vec![f64::INFINITY; width];
        let mut maxs = vec![f64::NEG_INFINITY; width];
        for row in rows {
            debug_assert_eq!(row.len(), width);
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(Normalizer { mins, maxs })
    }

    /// Scales a row into [0,1] per feature, clamping values outside the
    /// training range. Constant training columns map to 0.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ttl_left_examples() {
        assert_eq!(ttl_left(10, 3), 7);
        assert_eq!(ttl_left(10, 0), 10);
        assert_eq!(ttl_left(5, 5), 0);
    }

    #[test]
    #[should_panic(expected = "exceeds ttl_initial")]
    fn ttl_left_contract_violation_panics() {
        ttl_left(3, 4);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_target((0.0, 0.0), (3.0, 4.0)), 5.0);
        assert_eq!(distance_to_target((2.0, 2.0), (2.0, 2.0)), 0.0);
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = crate::rng::stream(5, 99, 0);
        use rand::Rng;
        for _ in 0..1000 {
            let a = (rng.random::<f64>() * 400.0, rng.random::<f64>() * 400.0);
            let b = (rng.random::<f64>() * 400.0, rng.random::<f64>() * 400.0);
            assert_eq!(distance_to_target(a, b), distance_to_target(b, a));
        }
    }

    #[test]
    fn success_rate_examples() {
        assert_eq!(success_rate(3.0, 4.0, 0.9), 0.75);
        assert_eq!(success_rate(0.0, 10.0, 0.9), 0.0);
        for k in 1..5 {
            assert_eq!(success_rate(k as f64, k as f64, 0.1), 1.0);
        }
        assert_eq!(success_rate(0.0, 0.0, 0.483582), 0.483582);
    }

    #[test]
    fn uptime_examples() {
        assert_eq!(uptime_ratio(50.0, 100.0, 0.9), 0.5);
        assert_eq!(uptime_ratio(0.0, 100.0, 0.9), 0.0);
        assert_eq!(uptime_ratio(33.0, 33.0, 0.9), 1.0);
        assert_eq!(uptime_ratio(0.0, 0.0, 0.846589), 0.846589);
    }

    #[test]
    fn buffer_ratio_examples() {
        assert_eq!(buffer_ratio(15, 30), 0.5);
        assert_eq!(buffer_ratio(0, 30), 0.0);
        assert_eq!(buffer_ratio(30, 30), 1.0);
    }

    #[test]
    fn device_type_encoding_is_alphabetical() {
        assert_eq!(encode_device_type(DeviceType::Phone), 0);
        assert_eq!(encode_device_type(DeviceType::Relay), 1);
        assert_eq!(encode_device_type(DeviceType::Sensor), 2);
    }

    #[test]
    fn normalizer_scales_and_clamps() {
        let rows = vec![vec![0.0, 7.0], vec![5.0, 7.0], vec![10.0, 7.0]];
        let n = Normalizer::fit(&rows).unwrap();
        assert_eq!(n.apply(&[0.0, 7.0]), vec![0.0, 0.0]);
        assert_eq!(n.apply(&[5.0, 7.0]), vec![0.5, 0.0]);
        assert_eq!(n.apply(&[10.0, 7.0]), vec![1.0, 0.0]);
        // out-of-range values clamp
        assert_eq!(n.apply(&[-3.0, 9.0]), vec![0.0, 0.0]);
        assert_eq!(n.apply(&[12.0, 9.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn normalizer_keeps_training_rows_in_unit_interval() {
        let mut rng = crate::rng::stream(3, 17, 0);
        use rand::Rng;
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.random::<f64>() * 100.0 - 50.0).collect())
            .collect();
        let n = Normalizer::fit(&rows).unwrap();
        for row in &rows {
            for v in n.apply(row) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn normalizer_rejects_empty() {
        assert!(Normalizer::fit(&[]).is_err());
    }
}
