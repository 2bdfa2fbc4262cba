//! Seed derivation.
//!
//! Every experiment takes one root seed. Child seeds are derived by mixing the
//! root with a label through SplitMix64, so a module's randomness depends only
//! on `(root, label)` and never on how many values other modules consumed.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a textual label.
pub fn derive(root: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the root.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix(root ^ splitmix(h))
}

/// Derives the `index`-th child seed of `root`.
pub fn derive_index(root: u64, index: u64) -> u64 {
    splitmix(root.wrapping_add(splitmix(index.wrapping_mul(GOLDEN))))
}

/// The generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
