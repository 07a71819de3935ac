//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by a 64-bit seed
//! (`SeedableRng::seed_from_u64`), with an optional stream number so that independent
//! consumers of one seed (noise, shuffling, initialization) never share a sequence. ChaCha8 is
//! platform independent, which keeps seeded runs bit-reproducible.

pub use rand_chacha::ChaCha8Rng as Rng;

use rand::SeedableRng;

pub mod stream {
    pub const NOISE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const SAMPLE: u64 = 5;
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn seeded_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
