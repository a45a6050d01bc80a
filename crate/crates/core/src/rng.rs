//! Seed-per-stream random number generation.
//!
//! Every Monte Carlo estimate is a function of `(seed, batch layout)` only.
//! Each batch owns a handful of ChaCha streams, addressed by batch index and
//! purpose, so no stream is ever shared between workers and the numbers a
//! batch consumes do not depend on how batches are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Stream = ChaCha8Rng;

/// What a stream is used for inside one batch.
///
/// Keeping the particle and field draws on separate streams makes runs that
/// differ only in the field weight (for instance two couplings) share their
/// particle paths exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Particle = 0,
    Field = 1,
    Inner = 2,
}

const PURPOSES: u64 = 4;

/// A stream addressed by `(seed, id)`.
pub fn stream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The stream a batch uses for one purpose.
pub fn batch_stream(seed: u64, batch: usize, purpose: Purpose) -> Stream {
    stream(seed, batch as u64 * PURPOSES + purpose as u64)
}
