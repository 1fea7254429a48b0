//! Deterministic seed schedule.
//!
//! Every random stream is keyed by `(master, n, replicate, stage)` so that
//! parallel sweeps reproduce bit for bit regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Pipeline stages that draw their own stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Tree = 1,
    Labels = 2,
    Continuum = 3,
    Pairs = 4,
    Bootstrap = 5,
}

pub fn derive_seed(master: u64, n: u64, replicate: u64, stage: Stage) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ n);
    h = splitmix64(h ^ replicate);
    splitmix64(h ^ stage as u64)
}

pub fn rng_for(master: u64, n: u64, replicate: u64, stage: Stage) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, n, replicate, stage))
}
