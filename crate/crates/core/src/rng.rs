//! Explicit, splittable random state.
//!
//! All randomized operations take an [`RngState`] argument; nothing reads
//! an ambient or thread-local generator. Child streams are derived by
//! hashing `(seed, tag)`, so a stream depends only on its derivation path and
//! never on how much randomness sibling streams consumed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream identified by `tag`.
    pub fn split(&self, tag: u64) -> RngState {
        RngState::new(splitmix64(
            self.seed ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019)),
        ))
    }

    /// Words consumed so far (the ChaCha block counter position).
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
