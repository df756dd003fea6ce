//! Counter-addressed random streams.
//!
//! Every random draw in the pipeline comes from `stream(seed, purpose, index)`.
//! The stream for iteration `t` depends only on the seed and `t`, never on
//! which worker runs it, so serial and parallel scoring see identical values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random generator behind every stream.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Per-example random score initialization.
    Init = 1,
    /// One sample-and-score iteration.
    Iteration = 2,
    /// Synthetic data generation and diagnostics.
    Auxiliary = 3,
}

const DOMAIN: &[u8; 8] = b"zcore\0\0\x01";

/// Opens the stream identified by `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(DOMAIN);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
