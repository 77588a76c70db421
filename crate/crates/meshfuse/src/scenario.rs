//! Node-deployment scenarios: seeded generation, CSV persistence, loading.
//!
//! A scenario file is comma-separated UTF-8 with the fixed header
//! `device_id,x_position,y_position,battery_level,signal_quality,success_rate,device_type,priority_tolerance,buffer_capacity,uptime_ratio`
//! and one row per device. Fractional fields are written with 6-decimal
//! fixed precision; generated values are quantized to the same precision up
//! front so save/load round-trips are exact.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{self, salt};
use crate::util::{q6, read_to_string, write_atomic};
use rand::Rng;

/// Fixed column order of the scenario CSV schema.
pub const SCENARIO_HEADER: &str = "device_id,x_position,y_position,battery_level,signal_quality,success_rate,device_type,priority_tolerance,buffer_capacity,uptime_ratio";

/// Device category; encoded ordinally (alphabetical) for the learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceType {
    Phone,
    Sensor,
    Relay,
}

impl DeviceType {
    /// Ordinal encoding: phone → 0, relay → 1, sensor → 2 (alphabetical).
    pub fn ordinal(self) -> u8 {
        match self {
            DeviceType::Phone => 0,
            DeviceType::Relay => 1,
            DeviceType::Sensor => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceType::Phone => "phone",
            DeviceType::Sensor => "sensor",
            DeviceType::Relay => "relay",
        }
    }
}

impl FromStr for DeviceType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phone" => Ok(DeviceType::Phone),
            "sensor" => Ok(DeviceType::Sensor),
            "relay" => Ok(DeviceType::Relay),
            other => Err(Error::Data(format!("unknown device type `{other}`"))),
        }
    }
}

impl fmt::Display for DeviceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a scenario file: the static attributes of a device.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub device_id: u32,
    pub x_position: f64,
    pub y_position: f64,
    pub battery_level: f64,
    pub signal_quality: f64,
    /// Initial historical delivery-success prior.
    pub success_rate: f64,
    pub device_type: DeviceType,
    pub priority_tolerance: f64,
    /// Message slots in the forwarding queue.
    pub buffer_capacity: u32,
    /// Initial availability prior.
    pub uptime_ratio: f64,
}

impl DeviceSpec {
    pub fn position(&self) -> (f64, f64) {
        (self.x_position, self.y_position)
    }

    fn validate(&self, row: usize) -> Result<()> {
        let fractions = [
            ("battery_level", self.battery_level),
            ("signal_quality", self.signal_quality),
            ("success_rate", self.success_rate),
            ("priority_tolerance", self.priority_tolerance),
            ("uptime_ratio", self.uptime_ratio),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Row {
                    row,
                    message: format!("{name} {v} outside [0,1]"),
                });
            }
        }
        if self.device_id == 0 {
            return Err(Error::Row {
                row,
                message: "device_id must be >= 1".into(),
            });
        }
        if self.buffer_capacity == 0 {
            return Err(Error::Row {
                row,
                message: "buffer_capacity must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Parameters for seeded scenario generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub node_count: usize,
    pub area_width: f64,
    pub area_height: f64,
    /// Fractions of phone / sensor / relay devices; must sum to 1.
    pub device_type_mix: [f64; 3],
    /// Inclusive range of buffer capacities.
    pub buffer_capacity_range: (u32, u32),
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Config(format!(
                "node_count must be >= 2, got {}",
                self.node_count
            )));
        }
        if self.area_width <= 0.0 || self.area_height <= 0.0 {
            return Err(Error::Config("area dimensions must be positive".into()));
        }
        let sum: f64 = self.device_type_mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "device_type_mix must sum to 1, got {sum}"
            )));
        }
        if self.device_type_mix.iter().any(|&f| f < 0.0) {
            return Err(Error::Config("device_type_mix fractions must be >= 0".into()));
        }
        let (lo, hi) = self.buffer_capacity_range;
        if lo < 1 || lo > hi {
            return Err(Error::Config(format!(
                "buffer_capacity_range ({lo}, {hi}) invalid"
            )));
        }
        Ok(())
    }
}

/// A full deployment: devices sorted by id, plus the generating config.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scenario_id: u32,
    pub devices: Vec<DeviceSpec>,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.devices.is_empty() {
            return Err(Error::Data("scenario has no devices".into()));
        }
        if self.devices.len() != self.config.node_count {
            return Err(Error::Data(format!(
                "device count {} != config.node_count {}",
                self.devices.len(),
                self.config.node_count
            )));
        }
        for (i, d) in self.devices.iter().enumerate() {
            d.validate(i + 1)?;
            if i > 0 && self.devices[i - 1].device_id >= d.device_id {
                return Err(Error::Data(format!(
                    "device ids not strictly ascending near id {}",
                    d.device_id
                )));
            }
        }
        Ok(())
    }

    pub fn device(&self, id: u32) -> Result<&DeviceSpec> {
        self.devices
            .binary_search_by_key(&id, |d| d.device_id)
            .map(|i| &self.devices[i])
            .map_err(|_| Error::UnknownDevice(id))
    }
}

/// Generates a scenario as a pure function of `config`.
///
/// Per device, attributes are drawn in schema column order from one ChaCha20
/// stream seeded by `config.seed`: position uniform over the area, the five
/// fraction fields uniform on [0,1], device type per the mix, and buffer
/// capacity uniform over the configured interval. Fractional values are
/// quantized to 6 decimals to match the file precision.
pub fn generate(config: &ScenarioConfig, scenario_id: u32) -> Result<Scenario> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, salt::SCENARIO, 0);
    let (cap_lo, cap_hi) = config.buffer_capacity_range;
    let mut devices = Vec::with_capacity(config.node_count);
    for i in 0..config.node_count {
        let x_position = q6(rng.random::<f64>() * config.area_width);
        let y_position = q6(rng.random::<f64>() * config.area_height);
        let battery_level = q6(rng.random::<f64>());
        let signal_quality = q6(rng.random::<f64>());
        let success_rate = q6(rng.random::<f64>());
        let t: f64 = rng.random();
        let device_type = if t < config.device_type_mix[0] {
            DeviceType::Phone
        } else if t < config.device_type_mix[0] + config.device_type_mix[1] {
            DeviceType::Sensor
        } else {
            DeviceType::Relay
        };
        let priority_tolerance = q6(rng.random::<f64>());
        let buffer_capacity = rng.random_range(cap_lo..=cap_hi);
        let uptime_ratio = q6(rng.random::<f64>());
        devices.push(DeviceSpec {
            device_id: (i + 1) as u32,
            x_position,
            y_position,
            battery_level,
            signal_quality,
            success_rate,
            device_type,
            priority_tolerance,
            buffer_capacity,
            uptime_ratio,
        });
    }
    let scenario = Scenario {
        scenario_id,
        devices,
        config: config.clone(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Renders a scenario in the fixed CSV schema.
pub fn to_csv(scenario: &Scenario) -> Result<String> {
    scenario.validate()?;
    let mut out = String::from(SCENARIO_HEADER);
    out.push('\n');
    for d in &scenario.devices {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{},{:.6}\n",
            d.device_id,
            d.x_position,
            d.y_position,
            d.battery_level,
            d.signal_quality,
            d.success_rate,
            d.device_type,
            d.priority_tolerance,
            d.buffer_capacity,
            d.uptime_ratio,
        ));
    }
    Ok(out)
}

/// Writes the scenario CSV atomically.
pub fn save(scenario: &Scenario, path: &Path) -> Result<()> {
    write_atomic(path, &to_csv(scenario)?)
}

/// Parses a scenario from CSV text. `scenario_id` is taken by the caller
/// (typically from the `devices_scenario_{i}.csv` filename).
pub fn from_csv(text: &str, scenario_id: u32) -> Result<Scenario> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("empty file".into()))?;
    check_header(header)?;

    let mut devices = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = i + 1;
        devices.push(parse_row(line, row)?);
    }
    if devices.is_empty() {
        return Err(Error::Data("scenario file contains a header but no devices".into()));
    }
    devices.sort_by_key(|d| d.device_id);
    for w in devices.windows(2) {
        if w[0].device_id == w[1].device_id {
            return Err(Error::Data(format!(
                "duplicate device_id {}",
                w[0].device_id
            )));
        }
    }
    let config = synthesized_config(&devices);
    let scenario = Scenario {
        scenario_id,
        devices,
        config,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Loads a scenario file; the scenario id is the trailing integer of the
/// file stem (`devices_scenario_7.csv` → 7), or 0 when absent.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = read_to_string(path)?;
    from_csv(&text, id_from_path(path))
}

pub fn id_from_path(path: &Path) -> u32 {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    digits.chars().rev().collect::<String>().parse().unwrap_or(0)
}

/// Saves a suite as `devices_scenario_{id}.csv` files under `dir`.
pub fn save_suite(scenarios: &[Scenario], dir: &Path) -> Result<()> {
    for s in scenarios {
        let path = dir.join(format!("devices_scenario_{}.csv", s.scenario_id));
        save(s, &path)?;
    }
    Ok(())
}

/// Loads every `devices_scenario_*.csv` under `dir`, sorted by scenario id.
pub fn load_suite(dir: &Path) -> Result<Vec<Scenario>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("devices_scenario_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::Data(format!(
            "no devices_scenario_*.csv files in {}",
            dir.display()
        )));
    }
    paths.sort_by_key(|p| id_from_path(p));
    paths.iter().map(|p| load(p)).collect()
}

fn check_header(header: &str) -> Result<()> {
    if header == SCENARIO_HEADER {
        return Ok(());
    }
    let actual: Vec<&str> = header.split(',').collect();
    for expected in SCENARIO_HEADER.split(',') {
        if !actual.contains(&expected) {
            return Err(Error::Schema(format!("missing column `{expected}`")));
        }
    }
    Err(Error::Schema(format!(
        "column order must be exactly `{SCENARIO_HEADER}`"
    )))
}

fn parse_row(line: &str, row: usize) -> Result<DeviceSpec> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 10 {
        return Err(Error::Row {
            row,
            message: format!("expected 10 fields, found {}", fields.len()),
        });
    }
    let int = |idx: usize, name: &str| -> Result<u32> {
        fields[idx].trim().parse().map_err(|_| Error::Row {
            row,
            message: format!("{name}: cannot parse `{}` as integer", fields[idx]),
        })
    };
    let num = |idx: usize, name: &str| -> Result<f64> {
        fields[idx].trim().parse().map_err(|_| Error::Row {
            row,
            message: format!("{name}: cannot parse `{}` as number", fields[idx]),
        })
    };
    let spec = DeviceSpec {
        device_id: int(0, "device_id")?,
        x_position: num(1, "x_position")?,
        y_position: num(2, "y_position")?,
        battery_level: num(3, "battery_level")?,
        signal_quality: num(4, "signal_quality")?,
        success_rate: num(5, "success_rate")?,
        device_type: fields[6].trim().parse().map_err(|_| Error::Row {
            row,
            message: format!("device_type: unknown type `{}`", fields[6]),
        })?,
        priority_tolerance: num(7, "priority_tolerance")?,
        buffer_capacity: int(8, "buffer_capacity")?,
        uptime_ratio: num(9, "uptime_ratio")?,
    };
    spec.validate(row)?;
    Ok(spec)
}

fn synthesized_config(devices: &[DeviceSpec]) -> ScenarioConfig {
    let n = devices.len() as f64;
    let count = |t: DeviceType| devices.iter().filter(|d| d.device_type == t).count() as f64;
    let max_x = devices.iter().map(|d| d.x_position).fold(0.0, f64::max);
    let max_y = devices.iter().map(|d| d.y_position).fold(0.0, f64::max);
    let cap_lo = devices.iter().map(|d| d.buffer_capacity).min().unwrap_or(1);
    let cap_hi = devices.iter().map(|d| d.buffer_capacity).max().unwrap_or(1);
    ScenarioConfig {
        seed: 0,
        node_count: devices.len(),
        area_width: max_x.max(1.0),
        area_height: max_y.max(1.0),
        device_type_mix: [
            count(DeviceType::Phone) / n,
            count(DeviceType::Sensor) / n,
            count(DeviceType::Relay) / n,
        ],
        buffer_capacity_range: (cap_lo, cap_hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64, n: usize) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            node_count: n,
            area_width: 100.0,
            area_height: 100.0,
            device_type_mix: [0.5, 0.3, 0.2],
            buffer_capacity_range: (10, 40),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = config(42, 25);
        let a = generate(&cfg, 1).unwrap();
        let b = generate(&cfg, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_csv(&a).unwrap(), to_csv(&b).unwrap());
    }

    #[test]
    fn two_nodes_in_bounds() {
        let cfg = config(7, 2);
        let s = generate(&cfg, 1).unwrap();
        assert_eq!(s.devices.len(), 2);
        assert_eq!(
            s.devices.iter().map(|d| d.device_id).collect::<Vec<_>>(),
            vec![1, 2]
        );
        for d in &s.devices {
            assert!((0.0..=100.0).contains(&d.x_position));
            assert!((0.0..=100.0).contains(&d.y_position));
        }
    }

    #[test]
    fn node_count_below_two_is_rejected() {
        let cfg = config(1, 1);
        assert!(matches!(generate(&cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn battery_mean_matches_uniform_law() {
        // Law-of-large-numbers check on the sampler: 10,000 devices.
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..100 {
            let s = generate(&config(seed, 100), 1).unwrap();
            total += s.devices.iter().map(|d| d.battery_level).sum::<f64>();
            count += s.devices.len();
        }
        assert_eq!(count, 10_000);
        let mean = total / count as f64;
        assert!((0.48..=0.52).contains(&mean), "mean battery {mean}");
    }

    #[test]
    fn table_sample_row_parses_exactly() {
        let text = format!(
            "{SCENARIO_HEADER}\n1,271.513599,327.777799,0.433033,0.784336,0.483582,phone,0.673843,30,0.846589\n2,0.000000,0.000000,0.500000,0.500000,0.500000,relay,0.500000,10,0.500000\n"
        );
        let s = from_csv(&text, 1).unwrap();
        let d = &s.devices[0];
        assert_eq!(d.device_id, 1);
        assert_eq!(d.x_position, 271.513599);
        assert_eq!(d.y_position, 327.777799);
        assert_eq!(d.battery_level, 0.433033);
        assert_eq!(d.signal_quality, 0.784336);
        assert_eq!(d.success_rate, 0.483582);
        assert_eq!(d.device_type, DeviceType::Phone);
        assert_eq!(d.priority_tolerance, 0.673843);
        assert_eq!(d.buffer_capacity, 30);
        assert_eq!(d.uptime_ratio, 0.846589);
    }

    #[test]
    fn header_only_file_is_an_error() {
        let err = from_csv(&format!("{SCENARIO_HEADER}\n"), 1).unwrap_err();
        assert!(matches!(err, Error::Data(_)), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let text = "device_id,x_position,y_position\n1,0,0\n";
        let err = from_csv(text, 1).unwrap_err();
        assert!(err.to_string().contains("battery_level"), "{err}");
    }

    #[test]
    fn out_of_range_fraction_reports_row() {
        let text = format!(
            "{SCENARIO_HEADER}\n1,0.000000,0.000000,0.100000,0.100000,0.100000,phone,0.100000,5,0.100000\n2,1.000000,1.000000,1.700000,0.100000,0.100000,phone,0.100000,5,0.100000\n"
        );
        let err = from_csv(&text, 1).unwrap_err();
        match err {
            Error::Row { row, ref message } => {
                assert_eq!(row, 2);
                assert!(message.contains("battery_level"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn file_round_trip_is_value_exact() {
        let s = generate(&config(11, 30), 4).unwrap();
        let text = to_csv(&s).unwrap();
        let reloaded = from_csv(&text, 4).unwrap();
        assert_eq!(reloaded.devices, s.devices);
        assert_eq!(to_csv(&reloaded).unwrap(), text);
    }

    #[test]
    fn empty_device_list_cannot_be_saved() {
        let s = Scenario {
            scenario_id: 1,
            devices: vec![],
            config: config(1, 2),
        };
        assert!(to_csv(&s).is_err());
    }

    #[test]
    fn suite_saves_ten_named_files() {
        let dir = tempfile::tempdir().unwrap();
        let scenarios: Vec<Scenario> = (1..=10)
            .map(|i| generate(&config(100 + i as u64, 10), i).unwrap())
            .collect();
        save_suite(&scenarios, dir.path()).unwrap();
        for i in 1..=10 {
            assert!(dir.path().join(format!("devices_scenario_{i}.csv")).exists());
        }
        let loaded = load_suite(dir.path()).unwrap();
        assert_eq!(loaded.len(), 10);
        assert_eq!(loaded[2].scenario_id, 3);
        assert_eq!(loaded[2].devices, scenarios[2].devices);
    }

    #[test]
    fn id_parsing_from_paths() {
        assert_eq!(id_from_path(Path::new("devices_scenario_12.csv")), 12);
        assert_eq!(id_from_path(Path::new("custom.csv")), 0);
    }
}
