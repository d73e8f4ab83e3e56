//! Cost model minimized by the association/allocation optimizer.
//!
//! A device's cost is the product of a relative-accuracy term `1 + theta`
//! and its packet error rate, so devices that matter more to learning and
//! devices on bad channels are both expensive. The network cost aggregates
//! device costs; because each device's term depends only on its own SBS and
//! RB, the total separates cleanly across devices, which is what lets the
//! matching games optimize it slot by slot.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::topology::{packet_error_rate, sinr_given, Assignment, NetworkState};
use crate::Result;

/// How a device with no SBS or no RB enters the network cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnscheduledPolicy {
    /// No channel means a guaranteed upload failure: PER is taken as 1 and
    /// the device contributes `1 + theta`.
    #[default]
    WorstCase,
}

/// Reduction applied over per-device costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean keeps values comparable across device counts.
    #[default]
    Mean,
    Sum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostConfig {
    /// Waterfall threshold `m` of the packet error model.
    pub waterfall_threshold: f64,
    pub unscheduled_policy: UnscheduledPolicy,
    pub aggregation: Aggregation,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            waterfall_threshold: 1.0,
            unscheduled_policy: UnscheduledPolicy::WorstCase,
            aggregation: Aggregation::Mean,
        }
    }
}

impl CostConfig {
    /// Cost config consistent with the channel parameters baked into `state`.
    pub fn for_state(state: &NetworkState) -> Self {
        CostConfig {
            waterfall_threshold: state.waterfall_threshold,
            ..CostConfig::default()
        }
    }
}

/// Cost of a single scheduled device: `(1 + theta) * (1 - exp(-m / sinr))`.
///
/// Bounded in `(0, 2)` for `theta` in `[0, 1)`: strictly increasing in
/// `theta` and strictly decreasing in `sinr`.
pub fn device_cost(theta: f64, sinr: f64, m: f64) -> f64 {
    (1.0 + theta) * packet_error_rate(sinr, m)
}

/// Worst-case cost of a device that cannot upload at all.
pub fn unscheduled_cost(theta: f64) -> f64 {
    1.0 + theta
}

/// Aggregate cost of `assignment` over the whole network.
///
/// Errors with [`Error::InfeasibleAssignment`] if the assignment violates the
/// scheduling constraints (RB exclusivity, SBS quota, index ranges) or does
/// not cover the state's device set.
pub fn network_cost(state: &NetworkState, assignment: &Assignment, cfg: &CostConfig) -> Result<f64> {
    if assignment.n_devices() != state.n_devices() {
        return Err(Error::InfeasibleAssignment(format!(
            "assignment covers {} devices, state has {}",
            assignment.n_devices(),
            state.n_devices()
        )));
    }
    assignment.validate(state.n_sbs(), state.n_rbs())?;

    let m = cfg.waterfall_threshold;
    let total: f64 = (0..state.n_devices())
        .map(|d| {
            let theta = state.device_thetas[d];
            match (assignment.assoc[d], assignment.alloc[d]) {
                (Some(s), Some(r)) => device_cost(theta, sinr_given(state, d, s, r), m),
                _ => match cfg.unscheduled_policy {
                    UnscheduledPolicy::WorstCase => unscheduled_cost(theta),
                },
            }
        })
        .sum();
    Ok(match cfg.aggregation {
        Aggregation::Mean => total / state.n_devices() as f64,
        Aggregation::Sum => total,
    })
}
