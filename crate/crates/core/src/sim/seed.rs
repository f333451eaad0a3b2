//! Deterministic seed derivation.
//!
//! Every random stream in a simulation is keyed by the root seed, an index
//! (run or provider number) and a purpose label, so streams never depend on
//! scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn derive_seed(root: u64, index: u64, label: &str) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(label)).wrapping_add(index))
}

pub fn rng_for(root: u64, index: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, index, label))
}
