//! Dispersed federated learning against a traditional single-aggregator
//! baseline on non-IID MNIST, at a small scale that runs in about a minute.
//!
//! Both schemes spend the same per-round budget T = E * S: the baseline puts
//! all of it into local epochs (E = T), DDFL splits it into S sub-global
//! iterations of E = T / S epochs inside each SBS group.
//!
//! ```text
//! cargo run --release --example ddfl_vs_fl
//! ```

use std::path::Path;

use dflsim::federated::{partition_noniid, run_ddfl, run_fl_baseline, TrainConfig};
use dflsim::harness::load_mnist_idx;
use dflsim::optimizer::{optimize, OptimizerConfig};
use dflsim::seed::{self, stream};
use dflsim::topology::{generate_topology, TopologyConfig};

fn main() -> dflsim::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let train = load_mnist_idx(
        &root.join("train-images-idx3-ubyte.gz"),
        &root.join("train-labels-idx1-ubyte.gz"),
    )?;
    let test = load_mnist_idx(
        &root.join("t10k-images-idx3-ubyte.gz"),
        &root.join("t10k-labels-idx1-ubyte.gz"),
    )?;

    let run_seed = 1u64;
    let topo = TopologyConfig {
        n_devices: 10,
        n_sbs: 2,
        n_rbs: 10,
        seed: seed::mix(run_seed, stream::TOPOLOGY),
        ..TopologyConfig::default()
    };
    let state = generate_topology(&topo)?;
    let (assignment, _) = optimize(
        &state,
        &OptimizerConfig {
            quota: 5,
            seed: seed::mix(run_seed, stream::OPTIMIZER),
            ..OptimizerConfig::default()
        },
    )?;
    let devices = partition_noniid(
        &train.labels,
        topo.n_devices,
        300,
        seed::mix(run_seed, stream::PARTITION),
    )?;

    let budget = 4;
    let rounds = 6;
    let fl_cfg = TrainConfig {
        local_iters: budget,
        subglobal_iters: 1,
        global_rounds: rounds,
        seed: run_seed,
        ..TrainConfig::default()
    };
    let ddfl_cfg = TrainConfig {
        local_iters: budget / 2,
        subglobal_iters: 2,
        ..fl_cfg.clone()
    };

    println!("10 devices, 2 SBS groups, budget T = {budget} epochs per round\n");
    println!("traditional FL (E = {budget})");
    let fl = run_fl_baseline(&train, &test, &devices, &fl_cfg)?;
    for (round, acc) in fl.metrics.series("test_accuracy").iter().enumerate() {
        println!("  round {round}: test accuracy {acc:.4}");
    }

    println!("\nDDFL (E = {}, S = 2)", budget / 2);
    let ddfl = run_ddfl(&state, &assignment, &train, &test, &devices, &ddfl_cfg)?;
    for (round, acc) in ddfl.metrics.series("test_accuracy").iter().enumerate() {
        println!("  round {round}: test accuracy {acc:.4}");
    }

    let fl_final = *fl.metrics.series("test_accuracy").last().unwrap();
    let ddfl_final = *ddfl.metrics.series("test_accuracy").last().unwrap();
    println!(
        "\nafter {rounds} rounds: DDFL {ddfl_final:.4} vs FL {fl_final:.4} ({})",
        if ddfl_final >= fl_final {
            "DDFL ahead"
        } else {
            "FL ahead at this scale"
        }
    );
    Ok(())
}
