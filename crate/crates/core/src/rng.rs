//! Named, seeded random streams.
//!
//! Every consumer of randomness (a layer's initializer, the epoch shuffler,
//! the split shuffler) draws from its own SplitMix64 stream whose state is
//! derived from `(seed, name)`. Streams therefore do not depend on the order
//! in which they are created.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use sha2::{Digest, Sha256};

/// Derives a 64-bit stream key from a base seed and a stream name.
pub fn stream_key(seed: u64, name: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Returns the SplitMix64 stream identified by `(seed, name)`.
pub fn named_stream(seed: u64, name: &str) -> SplitMix64 {
    SplitMix64::seed_from_u64(stream_key(seed, name))
}
