//! Deterministic seed derivation.
//!
//! Every stochastic component in the crate draws from a [`ChaCha8Rng`] whose
//! seed is derived from a single base seed plus a stream tag, so independent
//! components never share a stream and runs are reproducible bit-for-bit.
//! Derivation uses the splitmix64 finalizer, which is bijective in its input,
//! so distinct `(seed, tag)` chains cannot collapse onto one another cheaply.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags separating the crate's independent random streams.
pub mod stream {
    /// Device/incumbent placement and per-device learning weights.
    pub const TOPOLOGY: u64 = 0x746f_706f;
    /// Optimizer initialisation and baseline randomisation.
    pub const OPTIMIZER: u64 = 0x6f70_7469;
    /// Model weight initialisation shared by every training scheme.
    pub const TRAIN_INIT: u64 = 0x696e_6974;
    /// Per-device minibatch shuffling during local training.
    pub const LOCAL_TRAIN: u64 = 0x7467_726e;
    /// Bernoulli upload drops when the channel is coupled to training.
    pub const CHANNEL_DROPS: u64 = 0x6472_6f70;
    /// Shard shuffling for the non-IID partition.
    pub const PARTITION: u64 = 0x7368_7264;
}

/// splitmix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a stream `tag`.
///
/// Chain calls to bind more coordinates, e.g.
/// `mix(mix(seed, stream::LOCAL_TRAIN), device as u64)`.
pub fn mix(seed: u64, tag: u64) -> u64 {
    splitmix(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Standard generator for the derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
