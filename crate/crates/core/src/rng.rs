//! Seeded random streams.
//!
//! Every run derives four independent generators (instance, noise, beta,
//! corruption) from one master seed. A stream seed is
//! `splitmix64(master + (tag + 1) * 0x9E37_79B9_7F4A_7C15)`, and the
//! generator is ChaCha8 seeded with that value. Fixing the noise and beta
//! seeds while changing the corruption seed replays the same `G`, `H` and
//! `β` draws against a different adversary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `tag` of `master`.
pub fn split_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master.wrapping_add(tag.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Instance = 0,
    Noise = 1,
    Beta = 2,
    Corruption = 3,
}

/// The four per-run stream seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeeds {
    pub instance: u64,
    pub noise: u64,
    pub beta: u64,
    pub corruption: u64,
}

impl StreamSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            instance: split_seed(master, Stream::Instance as u64),
            noise: split_seed(master, Stream::Noise as u64),
            beta: split_seed(master, Stream::Beta as u64),
            corruption: split_seed(master, Stream::Corruption as u64),
        }
    }

    pub fn get(&self, stream: Stream) -> u64 {
        match stream {
            Stream::Instance => self.instance,
            Stream::Noise => self.noise,
            Stream::Beta => self.beta,
            Stream::Corruption => self.corruption,
        }
    }
}
