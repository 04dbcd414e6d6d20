//! Deterministic random streams.
//!
//! Every stochastic step draws from its own ChaCha stream keyed by
//! `(master seed, tag, iteration, index)`, so results never depend on the
//! order in which workers finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags keep unrelated consumers from ever sharing a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Bootstrap = 1,
    Select = 2,
    Offspring = 3,
    AutoencoderInit = 4,
    AutoencoderTrain = 5,
}

pub fn stream(seed: u64, tag: Stream, iteration: u64, index: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(tag as u64).to_le_bytes());
    key[16..24].copy_from_slice(&iteration.to_le_bytes());
    key[24..].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
