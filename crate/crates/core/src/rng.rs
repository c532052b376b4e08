//! Seeded random substreams.
//!
//! Every random draw in the crate comes from a stream keyed by the run seed and
//! a label (typically an instance id), so results do not depend on the order in
//! which workers process instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derives an independent generator for `(seed, parts…)`.
pub fn substream(seed: u64, parts: &[&str]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// Stable 64-bit hash of a byte string, used for mock-judge decisions.
pub fn stable_hash(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
