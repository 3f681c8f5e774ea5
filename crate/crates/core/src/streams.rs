//! Per-replicate random streams.
//!
//! Every replicate draws from its own ChaCha8 stream, keyed by the
//! experiment seed and a purpose tag and selected by the replicate index.
//! Results are therefore a pure function of `(seed, index)` whatever the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Replicate = 1,
    Ancestry = 2,
    Sampling = 3,
}

/// SplitMix64 finaliser, used to spread `(seed, purpose)` over the key.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seed for a sub-experiment, such as one population size of a sweep.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    mix(seed ^ mix(salt.wrapping_add(0x5EED)))
}

pub fn replicate_rng(seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ mix(purpose as u64);
    for chunk in key.chunks_exact_mut(8) {
        state = mix(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
