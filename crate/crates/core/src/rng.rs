//! Keyed, counter-based randomness.
//!
//! Every random draw in the crate comes from a [`KeyedRng`] whose key is a
//! tuple `(seed, label, indices...)`. The key is hashed with SHA-256
//! (`"metahmm/rng/v1" || seed_le || len(label)_le || label || index_le...`,
//! all integers as little-endian `u64`) into the 32-byte key of a ChaCha8
//! stream cipher, which is itself a counter-based generator. Integer and
//! float sampling are defined here rather than borrowed from `rand` so the
//! exact sequence of draws is pinned by this file alone:
//!
//! * `below(n)`: rejection sampling on raw `u64` words, reject `x >= 2^64 - (2^64 mod n)`,
//!   return `x mod n`.
//! * `unit_f64()`: `(x >> 11) * 2^-53`.
//! * `shuffle`: Fisher-Yates from the last index down, `j = below(i + 1)`.
//!
//! Two draws with different keys are independent streams, so callers never
//! have to reason about the order in which sub-components consume randomness.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"metahmm/rng/v1";

pub struct KeyedRng {
    inner: ChaCha8Rng,
}

impl KeyedRng {
    pub fn new(seed: u64, label: &str, indices: &[u64]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(DOMAIN);
        hasher.update(seed.to_le_bytes());
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        for index in indices {
            hasher.update(index.to_le_bytes());
        }
        let key: [u8; 32] = hasher.finalize().into();
        Self { inner: ChaCha8Rng::from_seed(key) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // 2^64 mod n
        let rem = (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if rem == 0 || x <= u64::MAX - rem {
                return x % n;
            }
        }
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }

    /// Index drawn from a categorical distribution given by its cumulative
    /// sums. `cumulative` must be non-decreasing with a positive last entry.
    pub fn categorical(&mut self, cumulative: &[f64]) -> usize {
        let total = *cumulative.last().expect("empty distribution");
        let u = self.unit_f64() * total;
        let idx = cumulative.partition_point(|&c| c <= u);
        // u < total always, but guard against trailing zero-mass entries.
        idx.min(cumulative.len() - 1)
    }
}
