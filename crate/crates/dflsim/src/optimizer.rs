//! Alternating optimization of device association and RB allocation.
//!
//! The joint scheduling problem is split into the two matching games: each
//! iteration re-solves the allocation with the association held fixed, then
//! the association with the allocation held fixed. From the second iteration
//! on, each game is warm-started from the incumbent assignment, so a
//! half-step can only keep or improve the current cost and the proposed
//! scheme's trace is monotone non-increasing.
//!
//! The baseline schemes replace one half (or both) with fresh uniform-random
//! feasible draws every iteration, which is what makes them baselines.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{network_cost, CostConfig};
use crate::error::Error;
use crate::matching::{
    allocate_resources, allocate_resources_from, associate_devices, associate_devices_from,
    build_rb_preferences, build_sbs_preferences,
};
use crate::seed;
use crate::topology::{Assignment, NetworkState};
use crate::Result;

/// Scheduling scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Alternating matching games (the scheme under study).
    #[default]
    Proposed,
    /// Matching-based association, uniform-random feasible RB allocation.
    Baseline1,
    /// Uniform-random feasible association, matching-based RB allocation.
    Baseline2,
    /// Both halves random.
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once the relative cost change between iterations falls below this.
    pub rel_tolerance: f64,
    /// Uniform per-SBS association quota.
    pub quota: usize,
    pub scheme: Scheme,
    /// Seeds the initial association and any baseline randomization.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 50,
            rel_tolerance: 1e-4,
            quota: 9,
            scheme: Scheme::Proposed,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.rel_tolerance.is_nan() || self.rel_tolerance <= 0.0 {
            return Err(Error::Config(format!(
                "rel_tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        if self.quota < 1 {
            return Err(Error::Config("quota must be at least 1".into()));
        }
        Ok(())
    }
}

/// Network cost after the initial assignment and after every iteration.
#[derive(Debug, Clone)]
pub struct CostTrace {
    /// `costs[0]` is the cost of the initial assignment; one entry follows
    /// per completed iteration.
    pub costs: Vec<f64>,
    /// Whether the relative-change stop fired before `max_iterations`.
    pub converged: bool,
    pub iterations_used: usize,
}

fn rel_change(prev: f64, next: f64) -> f64 {
    (prev - next).abs() / prev.abs().max(f64::MIN_POSITIVE)
}

/// Random feasible association: a uniform SBS draw per device, falling back
/// to the nearest SBS with spare quota when the draw is full.
pub fn random_feasible_association(
    state: &NetworkState,
    quota: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<usize>> {
    let n_sbs = state.n_sbs();
    let mut load = vec![0usize; n_sbs];
    let mut assoc = vec![None; state.n_devices()];
    for (d, slot) in assoc.iter_mut().enumerate() {
        let draw = rng.gen_range(0..n_sbs);
        let pick = if load[draw] < quota {
            Some(draw)
        } else {
            let p = state.device_positions[d];
            (0..n_sbs)
                .filter(|&s| load[s] < quota)
                .min_by(|&a, &b| {
                    let da = distance(p, state.sbs_positions[a]);
                    let db = distance(p, state.sbs_positions[b]);
                    da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                })
        };
        if let Some(s) = pick {
            *slot = Some(s);
            load[s] += 1;
        }
    }
    assoc
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Uniform-random feasible allocation: associated devices and RBs are paired
/// off in shuffled order; any surplus devices stay without an RB.
fn random_feasible_allocation(
    assoc: &[Option<usize>],
    n_rbs: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<usize>> {
    let mut devices: Vec<usize> = (0..assoc.len()).filter(|&d| assoc[d].is_some()).collect();
    let mut rbs: Vec<usize> = (0..n_rbs).collect();
    devices.shuffle(rng);
    rbs.shuffle(rng);
    let mut alloc = vec![None; assoc.len()];
    for (&d, &r) in devices.iter().zip(rbs.iter()) {
        alloc[d] = Some(r);
    }
    alloc
}

/// Devices that lost their association cannot keep an RB.
fn strip_orphaned_rbs(assignment: &mut Assignment) {
    for d in 0..assignment.n_devices() {
        if assignment.assoc[d].is_none() {
            assignment.alloc[d] = None;
        }
    }
}

/// Runs the proposed scheme from a random feasible association.
pub fn optimize(state: &NetworkState, cfg: &OptimizerConfig) -> Result<(Assignment, CostTrace)> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let initial = Assignment {
        assoc: random_feasible_association(state, cfg.quota, &mut rng),
        alloc: vec![None; state.n_devices()],
        quota: cfg.quota,
    };
    optimize_from(state, cfg, initial)
}

/// Runs the proposed scheme from an explicit starting assignment.
///
/// A converged assignment is a fixed point: rerunning from it changes
/// nothing and stops after one no-op iteration.
pub fn optimize_from(
    state: &NetworkState,
    cfg: &OptimizerConfig,
    initial: Assignment,
) -> Result<(Assignment, CostTrace)> {
    cfg.validate()?;
    let cost_cfg = CostConfig::for_state(state);
    let mut assignment = initial;
    let mut costs = vec![network_cost(state, &assignment, &cost_cfg)?];
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        let rb_prefs = build_rb_preferences(state, &assignment.assoc);
        assignment.alloc = if assignment.alloc.iter().all(Option::is_none) {
            // Nothing to warm-start from on the first pass.
            allocate_resources(&rb_prefs)?.assignment
        } else {
            allocate_resources_from(&rb_prefs, &assignment.alloc)?.assignment
        };

        let sbs_prefs = build_sbs_preferences(state, &assignment.alloc);
        assignment.assoc =
            associate_devices_from(&sbs_prefs, cfg.quota, false, &assignment.assoc)?.assignment;
        strip_orphaned_rbs(&mut assignment);

        let cost = network_cost(state, &assignment, &cost_cfg)?;
        let prev = *costs.last().unwrap();
        costs.push(cost);
        if rel_change(prev, cost) < cfg.rel_tolerance {
            converged = true;
            break;
        }
    }
    let iterations_used = costs.len() - 1;
    Ok((
        assignment,
        CostTrace {
            costs,
            converged,
            iterations_used,
        },
    ))
}

/// Runs one of the comparison schemes; the random half is redrawn every
/// iteration and the matched half is solved fresh (greedy seed) against it.
pub fn run_baseline(
    state: &NetworkState,
    cfg: &OptimizerConfig,
    scheme: Scheme,
) -> Result<(Assignment, CostTrace)> {
    cfg.validate()?;
    if scheme == Scheme::Proposed {
        return Err(Error::Config(
            "run_baseline expects baseline1, baseline2, or random".into(),
        ));
    }
    let cost_cfg = CostConfig::for_state(state);
    let mut rng = seed::rng(cfg.seed);
    let mut assignment = Assignment {
        assoc: random_feasible_association(state, cfg.quota, &mut rng),
        alloc: vec![None; state.n_devices()],
        quota: cfg.quota,
    };
    let mut costs = vec![network_cost(state, &assignment, &cost_cfg)?];
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        match scheme {
            Scheme::Baseline1 => {
                assignment.alloc =
                    random_feasible_allocation(&assignment.assoc, state.n_rbs(), &mut rng);
                let prefs = build_sbs_preferences(state, &assignment.alloc);
                assignment.assoc = associate_devices(&prefs, cfg.quota, false)?.assignment;
            }
            Scheme::Baseline2 => {
                assignment.assoc = random_feasible_association(state, cfg.quota, &mut rng);
                let prefs = build_rb_preferences(state, &assignment.assoc);
                assignment.alloc = allocate_resources(&prefs)?.assignment;
            }
            Scheme::Random => {
                assignment.assoc = random_feasible_association(state, cfg.quota, &mut rng);
                assignment.alloc =
                    random_feasible_allocation(&assignment.assoc, state.n_rbs(), &mut rng);
            }
            Scheme::Proposed => unreachable!(),
        }
        strip_orphaned_rbs(&mut assignment);

        let cost = network_cost(state, &assignment, &cost_cfg)?;
        let prev = *costs.last().unwrap();
        costs.push(cost);
        if rel_change(prev, cost) < cfg.rel_tolerance {
            converged = true;
            break;
        }
    }
    let iterations_used = costs.len() - 1;
    Ok((
        assignment,
        CostTrace {
            costs,
            converged,
            iterations_used,
        },
    ))
}

/// Dispatches on `cfg.scheme`.
pub fn run_scheme(state: &NetworkState, cfg: &OptimizerConfig) -> Result<(Assignment, CostTrace)> {
    match cfg.scheme {
        Scheme::Proposed => optimize(state, cfg),
        other => run_baseline(state, cfg, other),
    }
}
