//! Counter-based seed mixing.
//!
//! Every random quantity in the crate is derived from a 64-bit master seed
//! through [`mix`], a SplitMix64 finalizer applied to `seed ^ f(counter)`.
//! Per-site uniforms hash the integer coordinates of the site in `Z^d`
//! (not its index inside a box), so environments on nested boxes agree on
//! their common sites. Replica and path seeds hash `(seed, index)` the same
//! way and seed a ChaCha8 stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a counter into a seed.
#[inline]
pub fn mix(seed: u64, counter: u64) -> u64 {
    splitmix64(seed ^ splitmix64(counter.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D))
}

/// Hash of a lattice coordinate, independent of any box.
pub fn mix_coords(seed: u64, coords: &[i64]) -> u64 {
    let mut h = mix(seed, coords.len() as u64);
    for &c in coords {
        h = mix(h, c as u64);
    }
    h
}

/// Maps the top 53 bits of a hash to `[0, 1)`.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The uniform `xi(x)` attached to site `x` under `seed`.
#[inline]
pub fn site_uniform(seed: u64, coords: &[i64]) -> f64 {
    unit_f64(mix_coords(seed, coords))
}

/// Independent stream number `index` under `seed` (replicas, paths).
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, index))
}

/// Seed of sub-job `index`, for quantities that are themselves seeded.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ 0xA076_1D64_78BD_642F, index)
}
