//! Command-line front end: run or validate experiment configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dflsim::harness::{run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dflsim", version, about = "Co-simulator for dispersed federated learning over cellular IoT networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to a .json or .toml experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured number of Monte Carlo runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Override the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config file without running anything.
    Validate {
        /// Path to a .json or .toml experiment config.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> dflsim::Result<()> {
    match cli.command {
        Command::Run {
            config,
            runs,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = runs {
                cfg.n_runs = n;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            cfg.validate()?; // overrides can invalidate a good file
            let output = run_experiment(&cfg)?;
            for file in &output.files {
                println!("wrote {}", file.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!(
                "ok: {} experiment, {} runs, output to {}",
                match cfg.experiment {
                    dflsim::harness::ExperimentKind::CostSurface => "cost_surface",
                    dflsim::harness::ExperimentKind::OptimizerConvergence =>
                        "optimizer_convergence",
                    dflsim::harness::ExperimentKind::DdflVsFl => "ddfl_vs_fl",
                },
                cfg.n_runs,
                cfg.output_dir.display()
            );
            Ok(())
        }
    }
}
