//! Co-simulator for dispersed federated learning over a cellular IoT network.
//!
//! The library couples two layers that are usually studied in isolation:
//!
//! * a **network layer** in which battery-constrained devices are associated
//!   with small base stations (SBS) and granted uplink resource blocks (RB)
//!   through one-sided matching games ([`topology`], [`cost`], [`matching`],
//!   [`optimizer`]);
//! * a **learning layer** in which each SBS trains a sub-global model over its
//!   associated devices and all SBSs exchange sub-global models to form the
//!   same global model without a central server ([`model`], [`federated`]).
//!
//! [`harness`] drives Monte Carlo experiments over both layers and writes
//! deterministic CSV traces plus a JSON manifest describing each run.
//!
//! Every stochastic component takes an explicit seed; repeated runs with the
//! same configuration produce byte-identical outputs.

pub mod cost;
pub mod error;
pub mod federated;
pub mod harness;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod seed;
pub mod topology;

pub use error::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
