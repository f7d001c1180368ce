//! Reproducible random streams.
//!
//! A master seed is expanded into one ChaCha key per (domain, epoch); every
//! trajectory then reads its own stream of that key. Draws therefore depend
//! only on (seed, domain, epoch, trajectory index, position in stream) and
//! not on how trajectories are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Sampling = 1,
    Noise = 2,
    Verifier = 3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn derive(seed: u64, domain: Domain, epoch: u32) -> Self {
        let mut root = ChaCha20Rng::seed_from_u64(seed);
        root.set_stream(((domain as u64) << 32) | epoch as u64);
        StreamKey(root.gen())
    }

    /// Stream `index`, positioned at `word_pos`.
    pub fn stream(&self, index: u64, word_pos: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(index);
        if word_pos != 0 {
            rng.set_word_pos(word_pos);
        }
        rng
    }
}
