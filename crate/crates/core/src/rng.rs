//! Seeded random streams.
//!
//! Every stochastic stage draws from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based stream cipher generator whose output is fixed by its
//! 64-bit seed and 64-bit stream id on every platform. Independent work items
//! (one dataset record, one bootstrap replicate, one grid cell) each get their
//! own stream, so results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for work item `stream` under the run-level `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a sub-seed so that separate stages of one run (parameter draws,
/// sample draws, shuffling) never share a stream space.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
