//! Stable seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a `u64`.
//! Sub-seeds for parallel work are derived from a master seed and a path of
//! labels, so a task draws the same numbers no matter which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One component of a derivation path.
#[derive(Debug, Clone, Copy)]
pub enum Part<'a> {
    Int(u64),
    Text(&'a str),
}

impl From<u64> for Part<'_> {
    fn from(v: u64) -> Self {
        Part::Int(v)
    }
}

impl From<usize> for Part<'_> {
    fn from(v: usize) -> Self {
        Part::Int(v as u64)
    }
}

impl<'a> From<&'a str> for Part<'a> {
    fn from(v: &'a str) -> Self {
        Part::Text(v)
    }
}

/// Derive a child seed from `master` and a path such as
/// `[dataset, q_index, repeat, instance]`.
pub fn derive(master: u64, path: &[Part<'_>]) -> u64 {
    let mut h = splitmix64(master);
    for part in path {
        match *part {
            Part::Int(v) => {
                h = splitmix64(h ^ 0x51);
                h = splitmix64(h ^ v);
            }
            Part::Text(s) => {
                h = splitmix64(h ^ 0x7e);
                for chunk in s.as_bytes().chunks(8) {
                    let mut buf = [0u8; 8];
                    buf[..chunk.len()].copy_from_slice(chunk);
                    h = splitmix64(h ^ u64::from_le_bytes(buf));
                }
                h = splitmix64(h ^ s.len() as u64);
            }
        }
    }
    h
}
