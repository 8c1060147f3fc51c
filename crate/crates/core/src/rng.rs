//! Seeded random streams.
//!
//! Every generator draws from ChaCha8 keyed by the global seed, with the
//! stream number derived from a domain tag and an item index (user, edge,
//! ...). Output therefore does not depend on the order in which items are
//! generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Geometric = 1,
    PowerlawCluster = 2,
    ScoreMagnitudes = 3,
    TimeOffsets = 4,
    ContactTimes = 5,
    RealWorldScores = 6,
    Partition = 7,
    Sources = 8,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}
