//! Deterministic random streams.
//!
//! Every stochastic step draws from a ChaCha stream whose seed is a hash of
//! a base seed and a list of labels, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A label mixed into a stream key.
#[derive(Debug, Clone, Copy)]
pub enum Label<'a> {
    Str(&'a str),
    Num(u64),
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(s: &'a str) -> Self {
        Label::Str(s)
    }
}

impl From<u64> for Label<'_> {
    fn from(n: u64) -> Self {
        Label::Num(n)
    }
}

impl From<usize> for Label<'_> {
    fn from(n: usize) -> Self {
        Label::Num(n as u64)
    }
}

pub fn derive_seed(seed: u64, labels: &[Label<'_>]) -> u64 {
    let mut h = splitmix64(seed);
    for label in labels {
        let mut fnv = FNV_OFFSET;
        match label {
            Label::Str(s) => {
                fnv ^= 0x53;
                fnv = fnv.wrapping_mul(FNV_PRIME);
                for b in s.bytes() {
                    fnv ^= b as u64;
                    fnv = fnv.wrapping_mul(FNV_PRIME);
                }
            }
            Label::Num(n) => {
                fnv ^= 0x4e;
                fnv = fnv.wrapping_mul(FNV_PRIME);
                for b in n.to_le_bytes() {
                    fnv ^= b as u64;
                    fnv = fnv.wrapping_mul(FNV_PRIME);
                }
            }
        }
        h = splitmix64(h ^ fnv);
    }
    h
}

pub fn stream(seed: u64, labels: &[Label<'_>]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}
