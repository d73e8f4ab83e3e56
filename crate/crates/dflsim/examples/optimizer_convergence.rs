//! Alternating-matching optimizer on the reference 54-device scenario,
//! against the two baselines that keep one half of the decision random.
//!
//! ```text
//! cargo run --release --example optimizer_convergence
//! ```

use dflsim::optimizer::{run_scheme, OptimizerConfig, Scheme};
use dflsim::seed::{self, stream};
use dflsim::topology::{generate_topology, TopologyConfig};

fn main() -> dflsim::Result<()> {
    let seeds = [11u64, 12, 13];
    let schemes = [Scheme::Proposed, Scheme::Baseline1, Scheme::Baseline2];

    for seed in seeds {
        let topo = TopologyConfig {
            seed: seed::mix(seed, stream::TOPOLOGY),
            ..TopologyConfig::default()
        };
        let state = generate_topology(&topo)?;
        println!("topology seed {seed} (54 devices, 6 SBSs, 54 RBs)");
        for scheme in schemes {
            let cfg = OptimizerConfig {
                seed: seed::mix(seed, stream::OPTIMIZER),
                scheme,
                ..OptimizerConfig::default()
            };
            let (assignment, trace) = run_scheme(&state, &cfg)?;
            let scheduled = assignment.alloc.iter().flatten().count();
            println!(
                "  {scheme:?}: cost {:.4} -> {:.4} in {} iterations ({}converged, {scheduled} devices on RBs)",
                trace.costs[0],
                trace.costs.last().unwrap(),
                trace.iterations_used,
                if trace.converged { "" } else { "not " },
            );
        }
    }

    println!("\nproposed trace for seed 11, iteration by iteration:");
    let topo = TopologyConfig {
        seed: seed::mix(11, stream::TOPOLOGY),
        ..TopologyConfig::default()
    };
    let state = generate_topology(&topo)?;
    let cfg = OptimizerConfig {
        seed: seed::mix(11, stream::OPTIMIZER),
        ..OptimizerConfig::default()
    };
    let (_, trace) = run_scheme(&state, &cfg)?;
    for (i, c) in trace.costs.iter().enumerate() {
        println!("  iteration {i}: {c:.6}");
    }
    Ok(())
}
