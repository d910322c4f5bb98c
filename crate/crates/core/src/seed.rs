//! Deterministic seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from a run seed and a stream tag with [`derive_seed`]. The mixing
//! function is SplitMix64 applied to `seed ^ splitmix64(tag)`, so streams for
//! different tags (layers, epochs, phases) are independent of each other and
//! adding a new stream never perturbs the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the phases of a run.
pub mod stream {
    pub const INIT: u64 = 0x1A17;
    pub const SHUFFLE: u64 = 0x5_4FF1;
    pub const SCORING: u64 = 0x5C0_4E;
    pub const LAYER: u64 = 0x1A7E_4000;
    pub const EPOCH: u64 = 0xE90C_4000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `tag` from `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Seed of layer `layer` (0-based) for a given init seed.
pub fn layer_seed(init_seed: u64, layer: usize) -> u64 {
    derive_seed(init_seed, stream::LAYER.wrapping_add(layer as u64))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
