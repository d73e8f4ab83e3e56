//! Network geometry and channel model.
//!
//! A topology is a square service area with devices and incumbent users
//! dropped uniformly at random and SBSs fixed on a grid. The channel is
//! free-space path loss; uplink SINR treats the single incumbent licensed on
//! a resource block as the only interferer, since RBs are never shared
//! between devices.

use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::seed;
use crate::Result;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space reference term `20 log10(4 pi / c)`; see `fspl_constant_matches`.
const FSPL_CONSTANT_DB: f64 = -147.55221677811664;

/// Distances below this are clamped before computing path loss (meters).
const MIN_DISTANCE_M: f64 = 1.0;

/// Scenario parameters for one generated network.
///
/// Powers are in dBm and converted to watts once at generation time. The
/// defaults describe the reference scenario used across the examples: a
/// 1 km x 1 km area, 54 devices, 6 SBSs on a 2x3 grid, and one incumbent
/// per resource block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    /// Side length of the square service area in meters.
    pub area_side: f64,
    pub n_devices: usize,
    pub n_sbs: usize,
    /// Number of uplink resource blocks, each licensed to one incumbent.
    pub n_rbs: usize,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    pub subcarriers_per_rb: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Device transmit power in dBm.
    pub device_tx_power: f64,
    /// Incumbent transmit power in dBm.
    pub incumbent_tx_power: f64,
    /// Thermal noise density in dBm/Hz.
    pub noise_density: f64,
    /// Waterfall threshold `m` of the packet error model.
    pub waterfall_threshold: f64,
    /// Per-device learning weights are drawn uniformly from `[0, theta_max]`.
    pub theta_max: f64,
    pub seed: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            area_side: 1000.0,
            n_devices: 54,
            n_sbs: 6,
            n_rbs: 54,
            carrier_freq: 2.0e9,
            subcarriers_per_rb: 12,
            subcarrier_spacing: 15.0e3,
            device_tx_power: 23.0,
            incumbent_tx_power: 20.0,
            noise_density: -174.0,
            waterfall_threshold: 1.0,
            theta_max: 1.0,
            seed: 0,
        }
    }
}

impl TopologyConfig {
    /// Checks that all scenario parameters are physically meaningful.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        }
        positive("area_side", self.area_side)?;
        positive("carrier_freq", self.carrier_freq)?;
        positive("subcarrier_spacing", self.subcarrier_spacing)?;
        positive("waterfall_threshold", self.waterfall_threshold)?;
        if !self.theta_max.is_finite() || self.theta_max < 0.0 {
            return Err(Error::Config(format!(
                "theta_max must be non-negative, got {}",
                self.theta_max
            )));
        }
        for (name, v) in [
            ("device_tx_power", self.device_tx_power),
            ("incumbent_tx_power", self.incumbent_tx_power),
            ("noise_density", self.noise_density),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [
            ("n_devices", self.n_devices),
            ("n_sbs", self.n_sbs),
            ("n_rbs", self.n_rbs),
            ("subcarriers_per_rb", self.subcarriers_per_rb),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be nonzero")));
            }
        }
        Ok(())
    }

    /// Resource-block bandwidth in Hz.
    pub fn rb_bandwidth(&self) -> f64 {
        self.subcarriers_per_rb as f64 * self.subcarrier_spacing
    }
}

/// A generated network: positions, per-device weights, and gain tables.
///
/// Gains and powers are linear (watts), so SINR evaluation is pure
/// arithmetic on this struct.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub device_positions: Vec<[f64; 2]>,
    pub sbs_positions: Vec<[f64; 2]>,
    /// One incumbent per resource block, indexed by RB.
    pub incumbent_positions: Vec<[f64; 2]>,
    /// Learning weight `theta` per device.
    pub device_thetas: Vec<f64>,
    /// `device_gain[d][s]` is the linear channel gain from device d to SBS s.
    pub device_gain: Vec<Vec<f64>>,
    /// `incumbent_gain[r][s]` is the linear gain from RB r's incumbent to SBS s.
    pub incumbent_gain: Vec<Vec<f64>>,
    /// Device transmit power in watts.
    pub device_tx_w: f64,
    /// Incumbent transmit power in watts.
    pub incumbent_tx_w: f64,
    /// Thermal noise power over one resource block in watts.
    pub noise_w: f64,
    /// Waterfall threshold of the packet error model.
    pub waterfall_threshold: f64,
}

impl NetworkState {
    pub fn n_devices(&self) -> usize {
        self.device_positions.len()
    }

    pub fn n_sbs(&self) -> usize {
        self.sbs_positions.len()
    }

    pub fn n_rbs(&self) -> usize {
        self.incumbent_positions.len()
    }
}

/// A scheduling decision: which SBS serves each device and on which RB.
///
/// `None` marks an unscheduled device. The encoding makes "at most one SBS"
/// and "at most one RB" per device structural; RB exclusivity and the SBS
/// quota are checked by [`Assignment::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Device index to SBS index.
    pub assoc: Vec<Option<usize>>,
    /// Device index to resource-block index.
    pub alloc: Vec<Option<usize>>,
    /// Maximum devices any single SBS may serve.
    pub quota: usize,
}

impl Assignment {
    /// An assignment with every device unscheduled.
    pub fn empty(n_devices: usize, quota: usize) -> Self {
        Assignment {
            assoc: vec![None; n_devices],
            alloc: vec![None; n_devices],
            quota,
        }
    }

    pub fn n_devices(&self) -> usize {
        self.assoc.len()
    }

    /// Checks feasibility against a network of `n_sbs` SBSs and `n_rbs` RBs:
    /// indices in range, no RB granted twice, no RB without an association,
    /// and no SBS serving more than `quota` devices.
    pub fn validate(&self, n_sbs: usize, n_rbs: usize) -> Result<()> {
        if self.assoc.len() != self.alloc.len() {
            return Err(Error::InfeasibleAssignment(format!(
                "assoc covers {} devices but alloc covers {}",
                self.assoc.len(),
                self.alloc.len()
            )));
        }
        let mut rb_owner = vec![None; n_rbs];
        let mut sbs_load = vec![0usize; n_sbs];
        for d in 0..self.assoc.len() {
            if let Some(s) = self.assoc[d] {
                if s >= n_sbs {
                    return Err(Error::InfeasibleAssignment(format!(
                        "device {d} associated with SBS {s}, only {n_sbs} exist"
                    )));
                }
                sbs_load[s] += 1;
            }
            if let Some(r) = self.alloc[d] {
                if r >= n_rbs {
                    return Err(Error::InfeasibleAssignment(format!(
                        "device {d} granted RB {r}, only {n_rbs} exist"
                    )));
                }
                if self.assoc[d].is_none() {
                    return Err(Error::InfeasibleAssignment(format!(
                        "device {d} holds RB {r} without an SBS association"
                    )));
                }
                if let Some(other) = rb_owner[r] {
                    return Err(Error::InfeasibleAssignment(format!(
                        "RB {r} granted to both device {other} and device {d}"
                    )));
                }
                rb_owner[r] = Some(d);
            }
        }
        for (s, &load) in sbs_load.iter().enumerate() {
            if load > self.quota {
                return Err(Error::InfeasibleAssignment(format!(
                    "SBS {s} serves {load} devices, quota is {}",
                    self.quota
                )));
            }
        }
        Ok(())
    }
}

/// Free-space path loss in dB at `distance_m` meters and `freq_hz` Hz.
///
/// Distances below one meter are clamped to the reference distance.
pub fn path_loss_db(distance_m: f64, freq_hz: f64) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    20.0 * d.log10() + 20.0 * freq_hz.log10() + FSPL_CONSTANT_DB
}

/// Linear channel gain for the same path, clamped to at most 1.
pub fn linear_gain(distance_m: f64, freq_hz: f64) -> f64 {
    let g = 10f64.powf(-path_loss_db(distance_m, freq_hz) / 10.0);
    g.min(1.0)
}

/// Converts a power level from dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// SBS positions: centers of a near-square grid partition of the area,
/// row-major from the bottom-left cell.
fn sbs_grid(n_sbs: usize, area_side: f64) -> Vec<[f64; 2]> {
    let cols = (n_sbs as f64).sqrt().ceil() as usize;
    let rows = n_sbs.div_ceil(cols);
    let mut out = Vec::with_capacity(n_sbs);
    'outer: for row in 0..rows {
        for col in 0..cols {
            if out.len() == n_sbs {
                break 'outer;
            }
            out.push([
                (col as f64 + 0.5) * area_side / cols as f64,
                (row as f64 + 0.5) * area_side / rows as f64,
            ]);
        }
    }
    out
}

/// Samples a network from the scenario parameters.
///
/// Draw order is fixed (device positions, then incumbent positions, then
/// device weights) so a given `(config, seed)` always produces the same
/// state. SBS positions are deterministic.
pub fn generate_topology(cfg: &TopologyConfig) -> Result<NetworkState> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let coord = Uniform::new(0.0, cfg.area_side);

    let device_positions: Vec<[f64; 2]> = (0..cfg.n_devices)
        .map(|_| [coord.sample(&mut rng), coord.sample(&mut rng)])
        .collect();
    let incumbent_positions: Vec<[f64; 2]> = (0..cfg.n_rbs)
        .map(|_| [coord.sample(&mut rng), coord.sample(&mut rng)])
        .collect();
    let device_thetas: Vec<f64> = if cfg.theta_max == 0.0 {
        vec![0.0; cfg.n_devices]
    } else {
        let theta = Uniform::new(0.0, cfg.theta_max);
        (0..cfg.n_devices).map(|_| theta.sample(&mut rng)).collect()
    };

    let sbs_positions = sbs_grid(cfg.n_sbs, cfg.area_side);
    let gain_to_sbs = |p: [f64; 2]| -> Vec<f64> {
        sbs_positions
            .iter()
            .map(|&s| linear_gain(distance(p, s), cfg.carrier_freq))
            .collect()
    };
    let device_gain = device_positions.iter().map(|&p| gain_to_sbs(p)).collect();
    let incumbent_gain = incumbent_positions.iter().map(|&p| gain_to_sbs(p)).collect();

    let noise_dbm = cfg.noise_density + 10.0 * cfg.rb_bandwidth().log10();
    Ok(NetworkState {
        device_positions,
        sbs_positions,
        incumbent_positions,
        device_thetas,
        device_gain,
        incumbent_gain,
        device_tx_w: dbm_to_watts(cfg.device_tx_power),
        incumbent_tx_w: dbm_to_watts(cfg.incumbent_tx_power),
        noise_w: dbm_to_watts(noise_dbm),
        waterfall_threshold: cfg.waterfall_threshold,
    })
}

/// Uplink SINR of `device` as if it were served by SBS `sbs` on RB `rb`.
///
/// Pure arithmetic on the state's gain tables; the matching games use this to
/// price hypothetical assignments.
pub fn sinr_given(state: &NetworkState, device: usize, sbs: usize, rb: usize) -> f64 {
    let signal = state.device_tx_w * state.device_gain[device][sbs];
    let interference = state.incumbent_tx_w * state.incumbent_gain[rb][sbs];
    signal / (interference + state.noise_w)
}

/// Uplink SINR of `device` at its serving SBS under `assignment`.
///
/// The interference term is the incumbent licensed on the device's RB; errors
/// with [`Error::UnscheduledDevice`] if the device lacks an SBS or an RB.
pub fn sinr(device: usize, state: &NetworkState, assignment: &Assignment) -> Result<f64> {
    let s = assignment
        .assoc
        .get(device)
        .copied()
        .flatten()
        .ok_or(Error::UnscheduledDevice(device))?;
    let r = assignment
        .alloc
        .get(device)
        .copied()
        .flatten()
        .ok_or(Error::UnscheduledDevice(device))?;
    Ok(sinr_given(state, device, s, r))
}

/// Packet error rate `1 - exp(-m / sinr)` of the waterfall model.
///
/// Approaches 1 as SINR vanishes and 0 as SINR grows; `m` is the waterfall
/// threshold (higher `m` models a less robust modulation).
pub fn packet_error_rate(sinr: f64, m: f64) -> f64 {
    1.0 - (-m / sinr).exp()
}
