//! Seed derivation and random streams.
//!
//! Every random quantity in a run is drawn from a stream whose seed is a
//! hash of `(master seed, sweep index, drop index, phase)`. Streams are
//! ChaCha8 instances, so a stream never depends on how work is scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Independent stream families within one drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Phase {
    Geometry = 0x6765_6f6d,
    Shadowing = 0x7368_6164,
    Fading = 0x6661_6465,
    Training = 0x7472_6169,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds an arbitrary list of words into one 64-bit seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(master), |acc, &p| {
        mix64(acc ^ mix64(p.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

/// Seed for one `(sweep point, drop, phase)` triple.
pub fn drop_seed(master: u64, sweep_index: usize, drop_index: usize, phase: Phase) -> u64 {
    derive_seed(
        master,
        &[sweep_index as u64, drop_index as u64, phase as u64],
    )
}

pub fn stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the open interval (0, 1) from the top 53 bits of a hash.
#[inline]
fn open_unit(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variate that is a pure function of `key` (Box-Muller on
/// two hashed uniforms). Used where a value must be addressable by index
/// instead of drawn in sequence.
pub fn hashed_normal(key: u64) -> f64 {
    let u1 = open_unit(mix64(key));
    let u2 = open_unit(mix64(key ^ 0xD1B5_4A32_D192_ED03));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
