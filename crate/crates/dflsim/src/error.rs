//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by simulator operations.
///
/// Variants carry enough context to be actionable from a CLI message; none of
/// them capture backtraces or nested dyn errors beyond the I/O source.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Configuration could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A matching game was invoked with no agents or no slots.
    #[error("matching instance is empty: {0}")]
    EmptyInstance(&'static str),

    /// Strict association was asked to place more devices than total SBS quota.
    #[error("association capacity exceeded: {n_devices} devices > {capacity} total slots")]
    CapacityExceeded { n_devices: usize, capacity: usize },

    /// An assignment violates the scheduling constraints it claims to satisfy.
    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),

    /// SINR was requested for a device with no SBS association or no RB grant.
    #[error("device {0} is not scheduled (missing association or resource block)")]
    UnscheduledDevice(usize),

    /// Operands disagree in length or feature dimension.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Aggregation was attempted over zero surviving participants.
    #[error("nothing to aggregate: {0}")]
    EmptyAggregate(&'static str),

    /// A device was asked to train on an empty local dataset.
    #[error("device {0} has an empty local dataset")]
    EmptyDataset(usize),

    /// The non-IID partition cannot give every device its two shards.
    #[error("insufficient shards: need {needed}, dataset yields {available}")]
    InsufficientShards { needed: usize, available: usize },

    /// An IDX file does not start with the expected magic number.
    #[error("{}: bad IDX magic 0x{found:08x}, expected 0x{expected:08x}", path.display())]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    /// An IDX file ended before the payload its header promised.
    #[error("{}: truncated IDX file ({actual} bytes, header promises {expected})", path.display())]
    TruncatedFile {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    /// Image and label files disagree on the number of records.
    #[error("IDX count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for configuration problems, 2 for
    /// data-file problems (unreadable, malformed, or inconsistent inputs).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BadMagic { .. }
            | Error::TruncatedFile { .. }
            | Error::CountMismatch { .. }
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
