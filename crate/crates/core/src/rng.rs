//! Deterministic seed derivation. Every stochastic routine takes a
//! caller-owned generator; parallel work items derive their own streams from
//! `(seed, ids)` so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a base seed with an ordered list of ids.
pub fn derive_seed(base: u64, ids: &[u64]) -> u64 {
    ids.iter()
        .fold(splitmix64(base), |h, &id| splitmix64(h ^ splitmix64(id)))
}

pub fn rng_from(base: u64, ids: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(base, ids))
}
