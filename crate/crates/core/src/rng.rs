//! Seeded random source shared by every sampled family.
//!
//! All randomness comes from ChaCha8 seeded with the run's `u64` seed via
//! `SeedableRng::seed_from_u64`, so runs are reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
