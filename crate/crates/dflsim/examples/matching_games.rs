//! The two one-sided matching games that schedule the network: resource
//! block allocation (one RB per device) and SBS association (quota-capped
//! groups). Both run the same exchange-stability engine; this example shows
//! their raw outputs and verifies stability with the blocking-move checker.
//!
//! ```text
//! cargo run --example matching_games
//! ```

use dflsim::cost::{network_cost, CostConfig};
use dflsim::matching::{
    allocate_resources, associate_devices, build_rb_preferences, build_sbs_preferences,
    find_blocking_improvement, MatchMode,
};
use dflsim::topology::{generate_topology, Assignment, TopologyConfig};

fn main() -> dflsim::Result<()> {
    let cfg = TopologyConfig {
        n_devices: 8,
        n_sbs: 2,
        n_rbs: 8,
        seed: 3,
        ..TopologyConfig::default()
    };
    let state = generate_topology(&cfg)?;
    let quota = 4;

    // Start from a nearest-SBS association, then let the allocation game
    // hand out resource blocks against it.
    let assoc: Vec<Option<usize>> = (0..cfg.n_devices)
        .map(|d| (0..cfg.n_sbs).max_by(|&a, &b| state.device_gain[d][a].total_cmp(&state.device_gain[d][b])))
        .collect();
    let rb_prefs = build_rb_preferences(&state, &assoc);
    let allocation = allocate_resources(&rb_prefs)?;
    println!("resource block allocation (strongest-gain association fixed)");
    println!("  device -> rb: {:?}", allocation.assignment);
    println!(
        "  game total {:.4} after {} improving swaps",
        allocation.total_cost, allocation.swap_iterations
    );

    // Now the dual: hold those blocks fixed and let devices re-pick SBSs
    // under the quota.
    let sbs_prefs = build_sbs_preferences(&state, &allocation.assignment);
    let association = associate_devices(&sbs_prefs, quota, true)?;
    println!("\nSBS association (blocks fixed, quota {quota})");
    println!("  device -> sbs: {:?}", association.assignment);
    println!("  game total {:.4}", association.total_cost);

    let assignment = Assignment {
        assoc: association.assignment.clone(),
        alloc: allocation.assignment.clone(),
        quota,
    };
    let cost = network_cost(&state, &assignment, &CostConfig::for_state(&state))?;
    println!("\ncombined network cost: {cost:.4}");

    for mode in [MatchMode::Allocation, MatchMode::Association] {
        match find_blocking_improvement(&state, &assignment, mode)? {
            None => println!("exchange-stable in {mode:?} mode: no blocking move"),
            Some(mv) => println!("blocking move remains in {mode:?} mode: {mv:?}"),
        }
    }
    Ok(())
}
