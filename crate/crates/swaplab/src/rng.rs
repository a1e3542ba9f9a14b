//! Seed derivation and deterministic random streams.
//!
//! Every source of randomness in the pipeline is a `ChaCha8Rng` seeded by
//! mixing a master seed with structural tags (clip index, step, batch slot),
//! so parallel execution order can never change what gets drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stable mix of a master seed with structural tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut acc = splitmix64(master ^ 0x51ab_c0de_5eed_0001);
    for (i, t) in tags.iter().enumerate() {
        acc = splitmix64(acc ^ t.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(i as u64 + 1)));
    }
    acc
}

pub fn rng_from(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

/// Standard normal draws, f64.
pub fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn randn_f32(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| {
        let v: f64 = StandardNormal.sample(rng);
        v as f32
    }).collect()
}
