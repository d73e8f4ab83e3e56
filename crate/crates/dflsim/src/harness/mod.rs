//! Experiment harness: config files, MNIST ingestion, Monte Carlo
//! orchestration, and CSV/manifest output. This is the only module with
//! external interfaces; everything else is an in-process library.

pub mod config;
pub mod experiment;
pub mod idx;

pub use config::{DataConfig, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, ExperimentOutput};
pub use idx::load_mnist_idx;
