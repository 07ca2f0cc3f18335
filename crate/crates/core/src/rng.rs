//! Seeded random streams.
//!
//! A master seed identifies an experiment; independent workers take disjoint
//! ChaCha streams derived from it, so parallel fan-out never changes results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type SeedStream = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeedStream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` under the master `seed`.
pub fn substream(seed: u64, index: u64) -> SeedStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
