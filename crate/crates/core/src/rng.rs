//! Reproducible random substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream whose
//! seed is derived from a master seed and a path of integer labels, e.g.
//! `(seed, BOOTSTRAP, replicate, group)`. Streams for different paths are
//! statistically independent, and a stream never depends on the order in
//! which other streams were consumed, so parallel evaluation reproduces the
//! sequential result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator type handed to every sampling routine.
pub type StreamRng = ChaCha12Rng;

/// Labels for the top-level substream families.
pub mod domain {
    pub const MODEL: u64 = 0x6d6f_6465_6c00_0001;
    pub const DATA: u64 = 0x6461_7461_0000_0002;
    pub const BOOTSTRAP: u64 = 0x626f_6f74_0000_0003;
    pub const REPLICATION: u64 = 0x7265_706c_0000_0004;
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a 64-bit key from a master seed and a label path.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    let mut state = master;
    let mut key = splitmix64(&mut state);
    for &label in path {
        state ^= label.wrapping_mul(0xd6e8_feb8_6659_fd93).rotate_left(17) ^ key;
        key = splitmix64(&mut state);
    }
    key
}

/// Generator for the substream at `path` under `master`.
pub fn substream(master: u64, path: &[u64]) -> StreamRng {
    let key = derive_key(master, path);
    let mut seed = [0u8; 32];
    let mut state = key;
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    StreamRng::from_seed(seed)
}
