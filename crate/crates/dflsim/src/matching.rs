//! One-sided matching games for resource allocation and device association.
//!
//! Both games share one engine: slots (RBs or SBSs) hold devices up to a
//! capacity, every device prices every slot through the cost model, and an
//! unmatched device pays its worst-case penalty. Matching proceeds in two
//! phases: a greedy seed that fills slots in globally ascending cost order,
//! then local improvement until **exchange stability**: no unmatched device
//! can take or usurp a slot, no matched device can relocate, and no pair can
//! swap slots, at a strict reduction in total cost. Each improvement step
//! strictly reduces the total, so the loop terminates.
//!
//! Costs never exceed the unmatched penalty (a scheduled upload is never
//! worse than no upload), so unilaterally leaving a slot is never improving
//! and the engine has no "leave" move.

use crate::cost::{device_cost, unscheduled_cost};
use crate::error::Error;
use crate::topology::{sinr_given, Assignment, NetworkState};
use crate::Result;

/// Improvements smaller than this are treated as ties, which keeps the
/// improvement loop off floating-point noise.
const IMPROVE_EPS: f64 = 1e-12;

/// Ranked preferences of each slot over the eligible devices.
///
/// `lists[slot]` holds `(device, cost)` pairs ascending by cost, ties broken
/// by lower device id, and every list ranks the same eligible set.
/// `penalties[device]` is the cost of leaving that device unmatched; it is
/// indexed by global device id and also defines the device universe.
#[derive(Debug, Clone)]
pub struct PreferenceProfile {
    pub lists: Vec<Vec<(usize, f64)>>,
    pub penalties: Vec<f64>,
}

impl PreferenceProfile {
    pub fn n_slots(&self) -> usize {
        self.lists.len()
    }

    pub fn n_devices(&self) -> usize {
        self.penalties.len()
    }
}

/// Result of one matching game.
#[derive(Debug, Clone)]
pub struct MatchOutcome {
    /// Device id to slot id; `None` for devices left unmatched (ineligible
    /// devices are always `None`).
    pub assignment: Vec<Option<usize>>,
    /// Matched costs plus penalties of unmatched eligible devices.
    pub total_cost: f64,
    /// Improvement moves applied after the greedy seed.
    pub swap_iterations: usize,
}

/// A single cost-reducing move; `None` from the search certifies stability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Unmatched device takes a slot with spare capacity.
    Assign { device: usize, slot: usize },
    /// Matched device moves to a slot with spare capacity.
    Relocate { device: usize, to_slot: usize },
    /// Two matched devices exchange slots.
    Swap { device_a: usize, device_b: usize },
    /// Unmatched device takes a matched device's place.
    Displace { incoming: usize, outgoing: usize },
}

/// Which game a full [`Assignment`] is checked under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// RB allocation with the association held fixed.
    Allocation,
    /// SBS association with the allocation held fixed.
    Association,
}

fn sorted_by_cost(mut list: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    list.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    list
}

/// Preferences of every RB over the associated devices.
///
/// Device `d` at RB `r` costs `device_cost` under the SINR it would see at
/// its (fixed) serving SBS on that RB. Devices without an association are
/// not eligible for RBs.
pub fn build_rb_preferences(state: &NetworkState, assoc: &[Option<usize>]) -> PreferenceProfile {
    let m = state.waterfall_threshold;
    let lists = (0..state.n_rbs())
        .map(|r| {
            let list = assoc
                .iter()
                .enumerate()
                .filter_map(|(d, s)| {
                    s.map(|s| {
                        let theta = state.device_thetas[d];
                        (d, device_cost(theta, sinr_given(state, d, s, r), m))
                    })
                })
                .collect();
            sorted_by_cost(list)
        })
        .collect();
    PreferenceProfile {
        lists,
        penalties: state.device_thetas.iter().map(|&t| unscheduled_cost(t)).collect(),
    }
}

/// Preferences of every SBS over all devices.
///
/// Device `d` at SBS `s` costs `device_cost` under its (fixed) RB grant; a
/// device holding no RB cannot upload from anywhere, so it costs its
/// worst-case penalty at every SBS.
pub fn build_sbs_preferences(state: &NetworkState, alloc: &[Option<usize>]) -> PreferenceProfile {
    let m = state.waterfall_threshold;
    let lists = (0..state.n_sbs())
        .map(|s| {
            let list = (0..state.n_devices())
                .map(|d| {
                    let theta = state.device_thetas[d];
                    let cost = match alloc[d] {
                        Some(r) => device_cost(theta, sinr_given(state, d, s, r), m),
                        None => unscheduled_cost(theta),
                    };
                    (d, cost)
                })
                .collect();
            sorted_by_cost(list)
        })
        .collect();
    PreferenceProfile {
        lists,
        penalties: state.device_thetas.iter().map(|&t| unscheduled_cost(t)).collect(),
    }
}

/// Shared engine state for one game instance.
struct Game {
    n_slots: usize,
    /// Flat `device * n_slots + slot`; infinite for ineligible pairs.
    cost: Vec<f64>,
    penalty: Vec<f64>,
    /// Ascending ids of devices ranked by the profile.
    eligible: Vec<usize>,
    cap: Vec<usize>,
    slot_of: Vec<Option<usize>>,
    load: Vec<usize>,
}

impl Game {
    fn new(prefs: &PreferenceProfile, cap: Vec<usize>) -> Result<Game> {
        let n_slots = prefs.lists.len();
        let n_devices = prefs.penalties.len();
        if n_slots == 0 {
            return Err(Error::EmptyInstance("no slots to allocate"));
        }
        let mut cost = vec![f64::INFINITY; n_devices * n_slots];
        let mut is_eligible = vec![false; n_devices];
        for (s, list) in prefs.lists.iter().enumerate() {
            for &(d, c) in list {
                debug_assert!(d < n_devices && c.is_finite());
                cost[d * n_slots + s] = c;
                is_eligible[d] = true;
            }
        }
        let eligible: Vec<usize> = (0..n_devices).filter(|&d| is_eligible[d]).collect();
        if eligible.is_empty() {
            return Err(Error::EmptyInstance("no devices to match"));
        }
        Ok(Game {
            n_slots,
            cost,
            penalty: prefs.penalties.clone(),
            eligible,
            cap,
            slot_of: vec![None; n_devices],
            load: vec![0; n_slots],
        })
    }

    fn c(&self, d: usize, s: usize) -> f64 {
        self.cost[d * self.n_slots + s]
    }

    fn assign(&mut self, d: usize, s: usize) {
        debug_assert!(self.slot_of[d].is_none() && self.load[s] < self.cap[s]);
        self.slot_of[d] = Some(s);
        self.load[s] += 1;
    }

    fn unassign(&mut self, d: usize) {
        let s = self.slot_of[d].take().expect("device not matched");
        self.load[s] -= 1;
    }

    /// Places a pre-existing matching, validating capacity and eligibility.
    fn load_initial(&mut self, initial: &[Option<usize>]) -> Result<()> {
        if initial.len() != self.slot_of.len() {
            return Err(Error::InfeasibleAssignment(format!(
                "warm start covers {} devices, game has {}",
                initial.len(),
                self.slot_of.len()
            )));
        }
        for (d, &slot) in initial.iter().enumerate() {
            let Some(s) = slot else { continue };
            if s >= self.n_slots || !self.c(d, s).is_finite() {
                return Err(Error::InfeasibleAssignment(format!(
                    "warm start places device {d} on invalid slot {s}"
                )));
            }
            if self.load[s] == self.cap[s] {
                return Err(Error::InfeasibleAssignment(format!(
                    "warm start overfills slot {s}"
                )));
            }
            self.assign(d, s);
        }
        Ok(())
    }

    /// Total objective over the eligible device set.
    fn total(&self) -> f64 {
        self.eligible
            .iter()
            .map(|&d| match self.slot_of[d] {
                Some(s) => self.c(d, s),
                None => self.penalty[d],
            })
            .sum()
    }

    /// Fills spare capacity in globally ascending `(cost, device, slot)`
    /// order. Matching never costs more than the unmatched penalty in this
    /// domain, so filling is always at least as good as leaving devices out.
    fn greedy_fill(&mut self) {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &d in &self.eligible {
            if self.slot_of[d].is_some() {
                continue;
            }
            for s in 0..self.n_slots {
                let c = self.c(d, s);
                if c.is_finite() {
                    pairs.push((c, d, s));
                }
            }
        }
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (_, d, s) in pairs {
            if self.slot_of[d].is_none() && self.load[s] < self.cap[s] {
                self.assign(d, s);
            }
        }
    }

    /// First strict improvement in a fixed scan order: assignments to free
    /// capacity, relocations, pairwise swaps, then displacements. The fixed
    /// order makes runs reproducible.
    fn first_improving_move(&self) -> Option<Move> {
        for &d in &self.eligible {
            if self.slot_of[d].is_some() {
                continue;
            }
            for s in 0..self.n_slots {
                if self.load[s] < self.cap[s] && self.c(d, s) - self.penalty[d] < -IMPROVE_EPS {
                    return Some(Move::Assign { device: d, slot: s });
                }
            }
        }
        for &d in &self.eligible {
            let Some(cur) = self.slot_of[d] else { continue };
            for s in 0..self.n_slots {
                if s != cur && self.load[s] < self.cap[s] && self.c(d, s) - self.c(d, cur) < -IMPROVE_EPS
                {
                    return Some(Move::Relocate { device: d, to_slot: s });
                }
            }
        }
        for (i, &a) in self.eligible.iter().enumerate() {
            let Some(sa) = self.slot_of[a] else { continue };
            for &b in &self.eligible[i + 1..] {
                let Some(sb) = self.slot_of[b] else { continue };
                if sa == sb {
                    continue;
                }
                let delta = self.c(a, sb) + self.c(b, sa) - self.c(a, sa) - self.c(b, sb);
                if delta < -IMPROVE_EPS {
                    return Some(Move::Swap { device_a: a, device_b: b });
                }
            }
        }
        for &d in &self.eligible {
            if self.slot_of[d].is_some() {
                continue;
            }
            for &e in &self.eligible {
                let Some(s) = self.slot_of[e] else { continue };
                let delta = self.c(d, s) + self.penalty[e] - self.penalty[d] - self.c(e, s);
                if delta < -IMPROVE_EPS {
                    return Some(Move::Displace { incoming: d, outgoing: e });
                }
            }
        }
        None
    }

    fn apply(&mut self, mv: Move) {
        match mv {
            Move::Assign { device, slot } => self.assign(device, slot),
            Move::Relocate { device, to_slot } => {
                self.unassign(device);
                self.assign(device, to_slot);
            }
            Move::Swap { device_a, device_b } => {
                let sa = self.slot_of[device_a].unwrap();
                let sb = self.slot_of[device_b].unwrap();
                self.unassign(device_a);
                self.unassign(device_b);
                self.assign(device_a, sb);
                self.assign(device_b, sa);
            }
            Move::Displace { incoming, outgoing } => {
                let s = self.slot_of[outgoing].unwrap();
                self.unassign(outgoing);
                self.assign(incoming, s);
            }
        }
    }

    /// Improvement loop; returns the number of moves applied.
    fn run(&mut self) -> usize {
        // Every move cuts the total by more than IMPROVE_EPS, so this bound
        // is unreachable unless an invariant is broken.
        let max_moves = 1000 + 100 * self.eligible.len() * self.n_slots;
        let mut before = self.total();
        for iters in 0..max_moves {
            let Some(mv) = self.first_improving_move() else {
                return iters;
            };
            self.apply(mv);
            let after = self.total();
            debug_assert!(after < before, "move {mv:?} did not reduce total cost");
            before = after;
        }
        panic!("matching improvement loop failed to terminate");
    }
}

fn run_game(
    prefs: &PreferenceProfile,
    cap: Vec<usize>,
    initial: Option<&[Option<usize>]>,
) -> Result<MatchOutcome> {
    let mut game = Game::new(prefs, cap)?;
    if let Some(initial) = initial {
        game.load_initial(initial)?;
    }
    game.greedy_fill();
    let swap_iterations = game.run();
    Ok(MatchOutcome {
        total_cost: game.total(),
        assignment: game.slot_of,
        swap_iterations,
    })
}

/// One-to-one RB allocation over the profile's eligible devices.
pub fn allocate_resources(prefs: &PreferenceProfile) -> Result<MatchOutcome> {
    run_game(prefs, vec![1; prefs.n_slots()], None)
}

/// [`allocate_resources`] warm-started from an existing allocation instead
/// of the greedy seed; used to keep alternating optimization monotone.
pub fn allocate_resources_from(
    prefs: &PreferenceProfile,
    initial: &[Option<usize>],
) -> Result<MatchOutcome> {
    run_game(prefs, vec![1; prefs.n_slots()], Some(initial))
}

/// One-to-many SBS association with a uniform per-slot `quota`.
///
/// With `strict` set, refuses instances whose total capacity cannot hold
/// every device; otherwise the excess stays unmatched at worst-case cost.
pub fn associate_devices(prefs: &PreferenceProfile, quota: usize, strict: bool) -> Result<MatchOutcome> {
    let capacity = quota * prefs.n_slots();
    if strict && capacity < prefs.n_devices() {
        return Err(Error::CapacityExceeded {
            n_devices: prefs.n_devices(),
            capacity,
        });
    }
    run_game(prefs, vec![quota; prefs.n_slots()], None)
}

/// [`associate_devices`] warm-started from an existing association.
pub fn associate_devices_from(
    prefs: &PreferenceProfile,
    quota: usize,
    strict: bool,
    initial: &[Option<usize>],
) -> Result<MatchOutcome> {
    let capacity = quota * prefs.n_slots();
    if strict && capacity < prefs.n_devices() {
        return Err(Error::CapacityExceeded {
            n_devices: prefs.n_devices(),
            capacity,
        });
    }
    run_game(prefs, vec![quota; prefs.n_slots()], Some(initial))
}

/// First cost-reducing move available on `assignment` under a raw profile,
/// or `None` as a stability certificate.
pub fn first_improving_move(
    prefs: &PreferenceProfile,
    capacities: &[usize],
    assignment: &[Option<usize>],
) -> Result<Option<Move>> {
    let mut game = Game::new(prefs, capacities.to_vec())?;
    game.load_initial(assignment)?;
    Ok(game.first_improving_move())
}

/// Stability check for a full network [`Assignment`] under one of the two
/// games, rebuilding the relevant preference profile from `state`.
pub fn find_blocking_improvement(
    state: &NetworkState,
    assignment: &Assignment,
    mode: MatchMode,
) -> Result<Option<Move>> {
    match mode {
        MatchMode::Allocation => {
            let prefs = build_rb_preferences(state, &assignment.assoc);
            first_improving_move(&prefs, &vec![1; state.n_rbs()], &assignment.alloc)
        }
        MatchMode::Association => {
            let prefs = build_sbs_preferences(state, &assignment.alloc);
            first_improving_move(&prefs, &vec![assignment.quota; state.n_sbs()], &assignment.assoc)
        }
    }
}
