//! Deterministic seed derivation.
//!
//! One top-level seed is split into independent per-component streams
//! (data, model init, batching, ...) by hashing a label into it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `parent` and a component label.
pub fn derive(parent: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&out[..8]);
    u64::from_le_bytes(b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(parent: u64, label: &str) -> ChaCha8Rng {
    rng(derive(parent, label))
}

/// Short hex digest of a sequence of ids; used to compare selections across epochs.
pub fn digest_ids(ids: &[usize]) -> String {
    let mut h = Sha256::new();
    for id in ids {
        h.update((*id as u64).to_le_bytes());
    }
    hex16(&h.finalize())
}

pub fn digest_f64(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_bits().to_le_bytes());
    }
    hex16(&h.finalize())
}

fn hex16(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}
