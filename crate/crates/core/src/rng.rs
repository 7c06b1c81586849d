//! Seeded, counter-based random streams.
//!
//! Every random quantity in the crate is derived from an explicit `u64` seed and
//! a stream index. ChaCha is a counter-mode generator, so `(seed, stream)` pairs
//! address disjoint keystreams and no global state is involved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tag` into `base` to give an independent child seed.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

/// Seed used by chain `index` of a multi-chain run.
pub fn chain_seed(base: u64, index: usize) -> u64 {
    derive_seed(derive_seed(base, 0xC4A1_5EED), index as u64)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for draw `stream` of a batch seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
