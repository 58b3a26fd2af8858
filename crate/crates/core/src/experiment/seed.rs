//! Counter-based seed derivation. Every random stream is a pure function of
//! the master seed and its indices, so results do not depend on scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel = 1,
    Noise = 2,
}

pub fn derive_seed(master: u64, stream: Stream, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ (stream as u64).wrapping_mul(GOLDEN));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i));
    }
    h
}
