//! Stable seed derivation.
//!
//! Every random stream in the engine is keyed by a base seed plus a short
//! label, hashed with SHA-256 so that derived seeds are identical across
//! platforms and toolchain versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Derives a 64-bit seed from a base seed and a list of labelled parts.
pub fn derive(base: u64, parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn rng(base: u64, parts: &[&[u8]]) -> Rng {
    Rng::seed_from_u64(derive(base, parts))
}
