//! Tour of the physical layer: free-space path loss, SINR under incumbent
//! interference, and the packet error rate that feeds the cost model.
//!
//! ```text
//! cargo run --example channel_model
//! ```

use dflsim::topology::{
    dbm_to_watts, generate_topology, linear_gain, packet_error_rate, path_loss_db, sinr,
    sinr_given, Assignment, TopologyConfig,
};

fn main() -> dflsim::Result<()> {
    println!("free-space path loss at 2 GHz");
    for d in [1.0, 10.0, 100.0, 500.0, 1000.0] {
        println!(
            "  {:>6.0} m  {:>7.2} dB  gain {:.3e}",
            d,
            path_loss_db(d, 2.0e9),
            linear_gain(d, 2.0e9)
        );
    }

    println!("\ntransmit powers");
    for (label, dbm) in [("device", 23.0), ("incumbent", 20.0)] {
        println!("  {label:>9}: {dbm} dBm = {:.4} W", dbm_to_watts(dbm));
    }

    println!("\npacket error rate, waterfall threshold m = 1");
    for s in [0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        println!("  sinr {s:>5}: PER {:.4}", packet_error_rate(s, 1.0));
    }

    // A generated scenario: each device on its own resource block, serving
    // SBS chosen by strongest gain.
    let cfg = TopologyConfig {
        n_devices: 6,
        n_sbs: 2,
        n_rbs: 6,
        seed: 7,
        ..TopologyConfig::default()
    };
    let state = generate_topology(&cfg)?;
    let assignment = Assignment {
        assoc: (0..6)
            .map(|d| {
                (0..2).max_by(|&a, &b| state.device_gain[d][a].total_cmp(&state.device_gain[d][b]))
            })
            .collect(),
        alloc: (0..6).map(Some).collect(),
        quota: 3,
    };

    println!("\ngenerated 6-device scenario (seed 7)");
    println!("  device  sbs  rb   sinr        per");
    for d in 0..6 {
        let s = sinr(d, &state, &assignment)?;
        println!(
            "  {d:>6}  {:>3}  {:>2}   {s:>9.3}   {:.4}",
            assignment.assoc[d].unwrap(),
            assignment.alloc[d].unwrap(),
            packet_error_rate(s, state.waterfall_threshold)
        );
    }

    // Moving a device to the other SBS changes its gain and interference.
    let moved = sinr_given(&state, 0, 1 - assignment.assoc[0].unwrap(), 0);
    println!(
        "\ndevice 0 at the other SBS would see sinr {moved:.3} instead of {:.3}",
        sinr(0, &state, &assignment)?
    );
    Ok(())
}
