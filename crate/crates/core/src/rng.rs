//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from one master seed plus a
//! string label. Streams with different labels never alias, and the
//! derivation is a fixed function of its inputs, so identical seeds
//! reproduce identical runs on any platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a child seed from a base seed and a label (FNV-1a over the
/// base bytes followed by the label bytes).
pub fn derive_seed(base: u64, label: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in base.to_le_bytes() {
        hash = (hash ^ u64::from(byte)).wrapping_mul(PRIME);
    }
    for byte in label.as_bytes() {
        hash = (hash ^ u64::from(*byte)).wrapping_mul(PRIME);
    }
    hash
}

/// A ChaCha stream seeded from `derive_seed(base, label)`.
pub fn stream(base: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label))
}

/// Draws a unit-mean exponential variate by inverse transform.
pub fn exp1(rng: &mut impl rand::Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}
