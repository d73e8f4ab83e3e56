//! The per-device cost surface: (1 + theta) * (1 - exp(-m / sinr)).
//!
//! Prints a coarse slice of the surface and checks its two monotonicities:
//! cost falls as SINR improves and rises with the device's relative local
//! accuracy theta (lower theta means a better learner). The full 50x50 grid
//! is what the `cost_surface` experiment writes as CSV:
//!
//! ```text
//! cargo run --example cost_surface
//! dflsim run --config configs/cost_surface.toml
//! ```

use dflsim::cost::{device_cost, unscheduled_cost};

fn main() {
    let m = 1.0;
    let sinrs = [0.1, 0.3, 1.0, 3.0, 10.0, 100.0];
    let thetas = [0.0, 0.25, 0.5, 0.75, 1.0];

    print!("{:>8}", "sinr\\th");
    for t in thetas {
        print!("{t:>8.2}");
    }
    println!();
    for s in sinrs {
        print!("{s:>8.1}");
        for t in thetas {
            print!("{:>8.4}", device_cost(t, s, m));
        }
        println!();
    }

    println!(
        "\nan unscheduled device always pays the worst case: theta 0.5 -> {}",
        unscheduled_cost(0.5)
    );

    // The surface is monotone in both directions everywhere, not just at
    // the printed samples.
    let grid: Vec<f64> = (0..50).map(|i| 0.1 * (100.0f64 / 0.1).powf(i as f64 / 49.0)).collect();
    for pair in grid.windows(2) {
        for t in 0..=10 {
            let theta = t as f64 / 10.0;
            assert!(device_cost(theta, pair[1], m) < device_cost(theta, pair[0], m));
        }
    }
    println!("checked: strictly decreasing in sinr along 11 theta lines");
}
