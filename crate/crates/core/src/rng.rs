//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator. Parallel or
//! independent consumers derive disjoint streams from one root seed with
//! [`stream`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Stream `id` of the generator rooted at `seed`.
pub fn stream(seed: u64, id: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}
