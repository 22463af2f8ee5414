//! Seed plumbing. Every stochastic component draws from a named sub-stream
//! derived from one root seed, so changing the root seed reshuffles
//! everything while fixing it freezes the whole run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the stream name; stable across platforms.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit sub-seed for `name` under `root`.
pub fn sub_seed(root: u64, name: &str) -> u64 {
    let mut state = root ^ fnv1a64(name.as_bytes());
    splitmix64(&mut state)
}

/// Deterministic RNG for the named sub-stream of `root`.
pub fn stream(root: u64, name: &str) -> ChaCha8Rng {
    let mut state = root ^ fnv1a64(name.as_bytes());
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
