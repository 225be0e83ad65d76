//! Seed expansion.
//!
//! A single 64-bit root seed expands into independent ChaCha20 streams. The
//! stream id packs `(purpose, stage, chunk)` as
//! `purpose << 56 | stage << 40 | chunk` so that any worker can rebuild the
//! stream for a given chunk without coordination. Output therefore does not
//! depend on the worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Stream purposes.
pub const INIT: u64 = 1;
pub const LIFT: u64 = 2;
pub const ABORT: u64 = 3;
pub const SOLVE: u64 = 4;

/// Number of list entries handled by one derived stream.
pub const CHUNK: usize = 4096;

/// Root of a family of derived streams.
#[derive(Clone, Copy, Debug)]
pub struct StreamSeed {
    root: u64,
}

impl StreamSeed {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    /// Draw a fresh root from an existing generator.
    pub fn from_rng<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Self { root: rng.next_u64() }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, purpose: u64, stage: u64, chunk: u64) -> ChaCha20Rng {
        debug_assert!(purpose < 256 && stage < (1 << 16) && chunk < (1 << 40));
        let mut rng = ChaCha20Rng::seed_from_u64(self.root);
        rng.set_stream((purpose << 56) | (stage << 40) | chunk);
        rng
    }
}

/// Generator used throughout for a user-facing seed.
pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
