//! Stable seed derivation.
//!
//! Every random draw in the simulator comes from a generator keyed by a
//! hash of `(parent seed, labels...)`. Results therefore depend only on
//! *what* is being simulated, never on iteration order or on which worker
//! thread ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator used for all simulated randomness.
pub type SimRng = ChaCha8Rng;

/// A labelled component of a seed path.
#[derive(Debug, Clone, Copy)]
pub enum Label<'a> {
    Str(&'a str),
    Index(u64),
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(s: &'a str) -> Self {
        Label::Str(s)
    }
}

impl From<u64> for Label<'_> {
    fn from(i: u64) -> Self {
        Label::Index(i)
    }
}

impl From<usize> for Label<'_> {
    fn from(i: usize) -> Self {
        Label::Index(i as u64)
    }
}

/// Derives a child seed from `parent` and a sequence of labels.
///
/// Labels are length-prefixed and type-tagged, so `("ab", "c")` and
/// `("a", "bc")` never collide.
pub fn derive(parent: u64, labels: &[Label<'_>]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"semcom/v1");
    hasher.update(parent.to_le_bytes());
    for label in labels {
        match label {
            Label::Str(s) => {
                hasher.update([0u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
            Label::Index(i) => {
                hasher.update([1u8]);
                hasher.update(i.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

/// Builds a generator from a derived seed.
pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Shorthand for `rng(derive(parent, labels))`.
pub fn rng_for(parent: u64, labels: &[Label<'_>]) -> SimRng {
    rng(derive(parent, labels))
}
