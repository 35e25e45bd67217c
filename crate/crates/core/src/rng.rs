//! Reproducible random streams.
//!
//! A master seed and an experiment label select a ChaCha8 key; the replica
//! index selects the 64-bit ChaCha stream under that key. Replica `i` of an
//! experiment therefore draws the same words no matter how replicas are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// FNV-1a, used to turn experiment labels into stable 64-bit ids.
pub fn label_id(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Key layout: bytes 0..8 master seed (LE), 8..16 experiment id (LE),
/// 16..24 the ASCII tag `perclab\0`, 24..32 zero. Stream = replica.
pub fn stream(seed: u64, experiment: u64, replica: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&experiment.to_le_bytes());
    key[16..24].copy_from_slice(b"perclab\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica);
    rng
}
