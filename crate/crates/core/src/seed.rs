//! Stable seed derivation for parallel, reproducible sampling.
//!
//! Chains and cases each get a sub-seed derived from the master seed, the chain
//! index, and the case id. The derivation is a fixed FNV-1a/SplitMix64 chain so
//! results do not depend on the standard library's hasher (which is not stable
//! across releases) or on scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a64(bytes: &[u8], mut hash: u64) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Sub-seed for one chain of one case: `hash(master seed, chain index, case id)`.
pub fn derive_seed(master: u64, chain_index: u64, case_id: &str) -> u64 {
    let mut h = fnv1a64(case_id.as_bytes(), FNV_OFFSET);
    h = fnv1a64(&master.to_le_bytes(), h);
    h = fnv1a64(&chain_index.to_le_bytes(), h);
    splitmix64(h)
}

/// Deterministic RNG used everywhere in the crate.
pub type Rng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
