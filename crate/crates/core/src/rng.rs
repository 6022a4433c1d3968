//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes an explicit [`DetRng`]. Child streams are
//! derived from the parent *seed* and a key, never from the parent's
//! consumption state, so per-point streams are identical regardless of
//! evaluation order or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct DetRng {
    seed: [u8; 32],
    inner: ChaCha8Rng,
}

impl DetRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"uqc-master");
        hasher.update(seed.to_le_bytes());
        Self::from_seed_bytes(hasher.finalize().into())
    }

    fn from_seed_bytes(seed: [u8; 32]) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::from_seed(seed),
        }
    }

    /// Independent child stream identified by `key`.
    pub fn fork(&self, key: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(self.seed);
        hasher.update(key.to_le_bytes());
        Self::from_seed_bytes(hasher.finalize().into())
    }

    /// Child stream identified by a label and an index, e.g. `("run", 3)`.
    pub fn fork_named(&self, label: &str, key: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(self.seed);
        hasher.update(label.as_bytes());
        hasher.update([0u8]);
        hasher.update(key.to_le_bytes());
        Self::from_seed_bytes(hasher.finalize().into())
    }
}

impl RngCore for DetRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
