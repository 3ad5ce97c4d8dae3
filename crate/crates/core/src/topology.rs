//! Physical scenario: gNB/MEC/device placement, channel gains, tasks.
//!
//! A [`Topology`] is built once per run from a [`ScenarioConfig`] and a
//! seed, and is immutable afterwards. Device placement draws from a
//! per-device derived stream, so adding devices to a scenario never
//! moves the ones already there.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::rng;

/// Distances below this are clamped before the path-loss formula to
/// keep the SNR bounded as d -> 0.
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Binary megabyte convention: 1 MB = 2^20 bytes = 8 * 2^20 bits.
pub const BITS_PER_MB: f64 = 8.0 * 1024.0 * 1024.0;

/// Full scenario description. Field defaults are the reference
/// deployment: four gNBs on a 2000 m square, 500 m cells, one 4-core
/// 3 Gcycle/s MEC server per gNB, 180 kHz resource blocks at 23 dBm
/// transmit power against -114 dBm noise, task sizes uniform on
/// 0.5..2 MB at 400 cycles per bit.
///
/// `devices_per_gnb`, `rb_per_gnb`, `arrival_rate_tasks_per_s` and
/// `delay_threshold_s` have no reference values; the defaults here are
/// desk-scale choices sized so that the default communication action
/// space stays exhaustively enumerable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_side_m: f64,
    pub gnb_count: usize,
    pub cell_radius_m: f64,
    pub devices_per_gnb: usize,
    pub rb_per_gnb: usize,
    pub rb_bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm_per_rb: f64,
    pub cores_per_mec: usize,
    pub core_capacity_cycles_per_s: f64,
    pub task_size_bytes_min: f64,
    pub task_size_bytes_max: f64,
    pub cycles_per_bit: u64,
    /// Mean task arrival rate per device (M/M/1 arrival parameter).
    pub arrival_rate_tasks_per_s: f64,
    pub delay_threshold_s: f64,
    pub backhaul_rate_bits_per_s: f64,
    pub backhaul_prop_delay_s: f64,
    pub fading_enabled: bool,
    /// Probability that a device has a task to offload in a given
    /// round. 1.0 means every device offloads every round.
    pub task_presence_prob: f64,
    /// Reward emitted for an infeasible allocation, negated.
    pub penalty_reward: f64,
    /// Hard bound on enumerable action-space size.
    pub action_space_cap: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_side_m: 2000.0,
            gnb_count: 4,
            cell_radius_m: 500.0,
            devices_per_gnb: 2,
            rb_per_gnb: 3,
            rb_bandwidth_hz: 180e3,
            tx_power_dbm: 23.0,
            noise_dbm_per_rb: -114.0,
            cores_per_mec: 4,
            core_capacity_cycles_per_s: 3e9,
            task_size_bytes_min: 0.5 * 1024.0 * 1024.0,
            task_size_bytes_max: 2.0 * 1024.0 * 1024.0,
            cycles_per_bit: 400,
            arrival_rate_tasks_per_s: 0.2,
            delay_threshold_s: 10.0,
            backhaul_rate_bits_per_s: 1e9,
            backhaul_prop_delay_s: 5e-4,
            fading_enabled: false,
            task_presence_prob: 1.0,
            penalty_reward: 1.0,
            action_space_cap: 65_536,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be > 0, got {v}")))
            }
        }
        positive("area_side_m", self.area_side_m)?;
        positive("cell_radius_m", self.cell_radius_m)?;
        positive("rb_bandwidth_hz", self.rb_bandwidth_hz)?;
        positive("core_capacity_cycles_per_s", self.core_capacity_cycles_per_s)?;
        positive("task_size_bytes_min", self.task_size_bytes_min)?;
        positive("task_size_bytes_max", self.task_size_bytes_max)?;
        positive("delay_threshold_s", self.delay_threshold_s)?;
        positive("backhaul_rate_bits_per_s", self.backhaul_rate_bits_per_s)?;
        positive("penalty_reward", self.penalty_reward)?;
        if self.gnb_count == 0 {
            return Err(ConfigError::new("gnb_count", "must be >= 1"));
        }
        if self.rb_per_gnb == 0 {
            return Err(ConfigError::new("rb_per_gnb", "must be >= 1"));
        }
        if self.cores_per_mec == 0 {
            return Err(ConfigError::new("cores_per_mec", "must be >= 1"));
        }
        if self.cycles_per_bit == 0 {
            return Err(ConfigError::new("cycles_per_bit", "must be >= 1"));
        }
        if self.action_space_cap == 0 {
            return Err(ConfigError::new("action_space_cap", "must be >= 1"));
        }
        // Powers are given in dB scale, so any finite value is legal in
        // linear scale; reject only non-finite inputs.
        if !self.tx_power_dbm.is_finite() {
            return Err(ConfigError::new("tx_power_dbm", "must be finite"));
        }
        if !self.noise_dbm_per_rb.is_finite() {
            return Err(ConfigError::new("noise_dbm_per_rb", "must be finite"));
        }
        if self.task_size_bytes_min > self.task_size_bytes_max {
            return Err(ConfigError::new(
                "task_size_bytes_min",
                format!(
                    "min {} exceeds max {}",
                    self.task_size_bytes_min, self.task_size_bytes_max
                ),
            ));
        }
        if !(self.arrival_rate_tasks_per_s >= 0.0) || !self.arrival_rate_tasks_per_s.is_finite() {
            return Err(ConfigError::new(
                "arrival_rate_tasks_per_s",
                "must be finite and >= 0",
            ));
        }
        if self.backhaul_prop_delay_s < 0.0 {
            return Err(ConfigError::new("backhaul_prop_delay_s", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.task_presence_prob) {
            return Err(ConfigError::new("task_presence_prob", "must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watt(self.tx_power_dbm)
    }

    pub fn noise_w_per_rb(&self) -> f64 {
        dbm_to_watt(self.noise_dbm_per_rb)
    }

    pub fn task_size_bits_min(&self) -> u64 {
        (self.task_size_bytes_min * 8.0).round() as u64
    }

    pub fn task_size_bits_max(&self) -> u64 {
        (self.task_size_bytes_max * 8.0).round() as u64
    }

    /// Convenience for sweeps: pin the task size to exactly `mb`
    /// binary megabytes.
    pub fn set_fixed_task_size_mb(&mut self, mb: f64) {
        let bytes = mb * 1024.0 * 1024.0;
        self.task_size_bytes_min = bytes;
        self.task_size_bytes_max = bytes;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance_to(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GNodeB {
    pub id: usize,
    pub position: Position,
    pub rb_count: usize,
    pub mec_id: usize,
    pub device_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MecServer {
    pub id: usize,
    pub gnb_id: usize,
    pub core_count: usize,
    pub core_capacity_cycles_per_s: f64,
    pub sharing_group_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndDevice {
    pub id: usize,
    pub position: Position,
    pub gnb_id: usize,
    pub arrival_rate_tasks_per_s: f64,
    /// Populated by environments while simulating; always `None` in a
    /// freshly built topology.
    pub pending_task: Option<Task>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: u64,
    pub device_id: usize,
    pub size_bits: u64,
    pub required_cycles: u64,
    pub delay_threshold_s: f64,
}

/// The built scenario. Immutable after construction; safe to share
/// read-only across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub config: ScenarioConfig,
    pub gnbs: Vec<GNodeB>,
    pub mecs: Vec<MecServer>,
    pub devices: Vec<EndDevice>,
}

impl Topology {
    /// Structured text form used for inspection and golden tests.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn devices_of_gnb(&self, gnb_id: usize) -> Vec<&EndDevice> {
        self.gnbs[gnb_id]
            .device_ids
            .iter()
            .map(|&d| &self.devices[d])
            .collect()
    }
}

/// gNB centers on a regular grid covering the area square: `cols`
/// columns where `cols = ceil(sqrt(n))`, filled row-major.
fn grid_positions(count: usize, side: f64) -> Vec<Position> {
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let cell_w = side / cols as f64;
    let cell_h = side / rows as f64;
    (0..count)
        .map(|i| {
            let col = i % cols;
            let row = i / cols;
            Position {
                x: (col as f64 + 0.5) * cell_w,
                y: (row as f64 + 0.5) * cell_h,
            }
        })
        .collect()
}

/// Builds the physical scenario: gNBs on a deterministic grid, one MEC
/// server per gNB (all in sharing group 0), devices uniform on each
/// gNB's disk. Deterministic for a fixed seed.
pub fn build_topology(config: &ScenarioConfig, seed: u64) -> Result<Topology, ConfigError> {
    config.validate()?;

    let gnb_positions = grid_positions(config.gnb_count, config.area_side_m);
    let mut gnbs = Vec::with_capacity(config.gnb_count);
    let mut mecs = Vec::with_capacity(config.gnb_count);
    let mut devices = Vec::with_capacity(config.gnb_count * config.devices_per_gnb);

    for (g, position) in gnb_positions.into_iter().enumerate() {
        let mut device_ids = Vec::with_capacity(config.devices_per_gnb);
        for i in 0..config.devices_per_gnb {
            // Per-device stream: device i of gNB g sits at the same
            // spot no matter how many other devices the scenario has.
            let mut dev_rng = rng::stream(seed, &format!("gnb{g}/device{i}/position"));
            let radius = config.cell_radius_m * dev_rng.gen::<f64>().sqrt();
            let angle = 2.0 * std::f64::consts::PI * dev_rng.gen::<f64>();
            let id = devices.len();
            device_ids.push(id);
            devices.push(EndDevice {
                id,
                position: Position {
                    x: position.x + radius * angle.cos(),
                    y: position.y + radius * angle.sin(),
                },
                gnb_id: g,
                arrival_rate_tasks_per_s: config.arrival_rate_tasks_per_s,
                pending_task: None,
            });
        }
        gnbs.push(GNodeB {
            id: g,
            position,
            rb_count: config.rb_per_gnb,
            mec_id: g,
            device_ids,
        });
        mecs.push(MecServer {
            id: g,
            gnb_id: g,
            core_count: config.cores_per_mec,
            core_capacity_cycles_per_s: config.core_capacity_cycles_per_s,
            sharing_group_id: 0,
        });
    }

    Ok(Topology {
        config: config.clone(),
        gnbs,
        mecs,
        devices,
    })
}

/// Log-distance path loss in dB: `128.1 + 37.6 * log10(d_km)`, with d
/// clamped below at [`MIN_DISTANCE_M`].
pub fn path_loss_db(distance_m: f64) -> f64 {
    debug_assert!(distance_m > 0.0, "distance must be positive");
    let d = distance_m.max(MIN_DISTANCE_M);
    128.1 + 37.6 * (d / 1000.0).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Linear channel gain over a distance, before fading.
pub fn gain_from_distance(distance_m: f64) -> f64 {
    db_to_linear(-path_loss_db(distance_m))
}

/// Linear channel gain between a gNB and one of its devices. With
/// fading enabled the distance gain is scaled by a unit-mean
/// exponential draw (Rayleigh power, block fading: callers redraw per
/// environment step).
pub fn channel_gain(
    gnb: &GNodeB,
    device: &EndDevice,
    fading: bool,
    rng: &mut impl Rng,
) -> f64 {
    debug_assert_eq!(device.gnb_id, gnb.id, "device not associated with gNB");
    let base = gain_from_distance(gnb.position.distance_to(&device.position));
    if fading {
        base * rng::exp1(rng)
    } else {
        base
    }
}

/// Draws a task for a device: integer size uniform on the configured
/// bit range, cycles derived exactly as `size_bits * cycles_per_bit`.
pub fn sample_task(
    device: &EndDevice,
    task_id: u64,
    config: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Task {
    let size_bits = rng.gen_range(config.task_size_bits_min()..=config.task_size_bits_max());
    Task {
        id: task_id,
        device_id: device.id,
        size_bits,
        required_cycles: size_bits * config.cycles_per_bit,
        delay_threshold_s: config.delay_threshold_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_gnbs_sit_at_cell_centers() {
        let topo = build_topology(&ScenarioConfig::default(), 1).unwrap();
        let centers: Vec<(f64, f64)> = topo
            .gnbs
            .iter()
            .map(|g| (g.position.x, g.position.y))
            .collect();
        assert_eq!(
            centers,
            vec![
                (500.0, 500.0),
                (1500.0, 500.0),
                (500.0, 1500.0),
                (1500.0, 1500.0)
            ]
        );
    }

    #[test]
    fn zero_devices_is_a_valid_topology() {
        let config = ScenarioConfig {
            devices_per_gnb: 0,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config, 1).unwrap();
        assert!(topo.devices.is_empty());
        assert!(topo.gnbs.iter().all(|g| g.device_ids.is_empty()));
    }

    #[test]
    fn same_seed_builds_byte_identical_topologies() {
        let config = ScenarioConfig::default();
        let a = build_topology(&config, 42).unwrap();
        let b = build_topology(&config, 42).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let c = build_topology(&config, 43).unwrap();
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn devices_lie_within_their_cell() {
        for seed in 0..20 {
            let config = ScenarioConfig {
                devices_per_gnb: 5,
                ..ScenarioConfig::default()
            };
            let topo = build_topology(&config, seed).unwrap();
            for dev in &topo.devices {
                let gnb = &topo.gnbs[dev.gnb_id];
                let d = gnb.position.distance_to(&dev.position);
                assert!(d <= config.cell_radius_m + 1e-9, "seed {seed}: d = {d}");
            }
        }
    }

    #[test]
    fn adding_devices_does_not_move_existing_ones() {
        let small = ScenarioConfig {
            devices_per_gnb: 2,
            ..ScenarioConfig::default()
        };
        let large = ScenarioConfig {
            devices_per_gnb: 5,
            ..ScenarioConfig::default()
        };
        let a = build_topology(&small, 9).unwrap();
        let b = build_topology(&large, 9).unwrap();
        for g in 0..4 {
            let da = a.devices_of_gnb(g);
            let db = b.devices_of_gnb(g);
            for i in 0..2 {
                assert_eq!(da[i].position, db[i].position);
            }
        }
    }

    #[test]
    fn invalid_config_names_the_field() {
        let config = ScenarioConfig {
            rb_per_gnb: 0,
            ..ScenarioConfig::default()
        };
        let err = build_topology(&config, 0).unwrap_err();
        assert_eq!(err.field, "rb_per_gnb");

        let config = ScenarioConfig {
            task_size_bytes_min: 3e6,
            task_size_bytes_max: 1e6,
            ..ScenarioConfig::default()
        };
        assert_eq!(config.validate().unwrap_err().field, "task_size_bytes_min");
    }

    #[test]
    fn path_loss_reference_points() {
        assert!((path_loss_db(1000.0) - 128.1).abs() < 1e-12);
        assert!((path_loss_db(100.0) - 90.5).abs() < 1e-12);
        // Independent evaluation of the formula at 500 m.
        let expected = 128.1 + 37.6 * 0.5f64.log10();
        assert!((path_loss_db(500.0) - expected).abs() < 1e-12);
        assert!((path_loss_db(500.0) - 116.78).abs() < 0.01);
    }

    #[test]
    fn path_loss_clamps_below_ten_meters() {
        assert_eq!(path_loss_db(1.0), path_loss_db(10.0));
        assert_eq!(path_loss_db(0.001), path_loss_db(10.0));
    }

    #[test]
    fn path_loss_is_monotone_in_distance() {
        let mut prev = f64::NEG_INFINITY;
        let mut d = 0.5;
        while d < 5000.0 {
            let pl = path_loss_db(d);
            assert!(pl >= prev, "non-monotone at {d}");
            prev = pl;
            d *= 1.3;
        }
    }

    #[test]
    fn gain_is_db_inverse_of_path_loss() {
        assert!((db_to_linear(-100.0) - 1e-10).abs() < 1e-24);
        let g = gain_from_distance(350.0);
        let expected = 10f64.powf(-path_loss_db(350.0) / 10.0);
        assert_eq!(g, expected);
    }

    #[test]
    fn channel_gain_without_fading_is_deterministic() {
        let topo = build_topology(&ScenarioConfig::default(), 5).unwrap();
        let gnb = &topo.gnbs[0];
        let dev = &topo.devices[gnb.device_ids[0]];
        let mut rng = rng::stream(0, "x");
        let a = channel_gain(gnb, dev, false, &mut rng);
        let b = channel_gain(gnb, dev, false, &mut rng);
        assert_eq!(a, b);
    }

    #[test]
    fn fading_factor_has_unit_mean() {
        let topo = build_topology(&ScenarioConfig::default(), 5).unwrap();
        let gnb = &topo.gnbs[0];
        let dev = &topo.devices[gnb.device_ids[0]];
        let base = channel_gain(gnb, dev, false, &mut rng::stream(0, "x"));
        let mut rng = rng::stream(7, "fading");
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| channel_gain(gnb, dev, true, &mut rng) / base)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "fading mean {mean}");
    }

    #[test]
    fn one_megabyte_task_is_exact() {
        let config = ScenarioConfig {
            task_size_bytes_min: 1024.0 * 1024.0,
            task_size_bytes_max: 1024.0 * 1024.0,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config, 0).unwrap();
        let task = sample_task(&topo.devices[0], 0, &config, &mut rng::stream(0, "t"));
        assert_eq!(task.size_bits, 8_388_608);
        assert_eq!(task.required_cycles, 3_355_443_200);
    }

    #[test]
    fn degenerate_range_always_yields_half_megabyte() {
        let config = ScenarioConfig {
            task_size_bytes_max: 0.5 * 1024.0 * 1024.0,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config, 0).unwrap();
        let mut rng = rng::stream(1, "t");
        for i in 0..100 {
            let task = sample_task(&topo.devices[0], i, &config, &mut rng);
            assert_eq!(task.size_bits, 4_194_304);
        }
    }

    #[test]
    fn task_sizes_average_to_the_range_midpoint() {
        let config = ScenarioConfig::default();
        let topo = build_topology(&config, 0).unwrap();
        let mut rng = rng::stream(2, "sizes");
        let n = 100_000;
        let mean_mb: f64 = (0..n)
            .map(|i| sample_task(&topo.devices[0], i, &config, &mut rng).size_bits as f64)
            .sum::<f64>()
            / n as f64
            / BITS_PER_MB;
        assert!((mean_mb - 1.25).abs() < 0.0125, "mean {mean_mb} MB");
    }

    #[test]
    fn cycle_ratio_is_exact_for_every_task() {
        let config = ScenarioConfig::default();
        let topo = build_topology(&config, 0).unwrap();
        let mut rng = rng::stream(3, "ratio");
        for i in 0..10_000 {
            let task = sample_task(&topo.devices[0], i, &config, &mut rng);
            let ratio = task.required_cycles as f64 / task.size_bits as f64;
            assert_eq!(ratio, config.cycles_per_bit as f64);
        }
    }
}
