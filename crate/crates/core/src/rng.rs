//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha8 stream derived from
//! a 64-bit seed and a fixed stream number, so adding draws in one step never
//! shifts the sequence seen by another. ChaCha output is platform independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub(crate) const REF_TYPES: u64 = 1;
pub(crate) const CLASS_REFS: u64 = 2;
pub(crate) const OBJECT_CLASSES: u64 = 3;
pub(crate) const OBJECT_REFS: u64 = 4;
/// Workload client `c` uses stream `CLIENT_BASE + c`.
pub(crate) const CLIENT_BASE: u64 = 1 << 16;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
