//! Seed derivation and the few samplers the simulator needs.
//!
//! Every random stream is a xoshiro256++ generator whose state is expanded
//! from a 64-bit seed with splitmix64. Independent streams are keyed by
//! hashing `(master, index, tag)` so that, e.g., the action stream of
//! source 2 never overlaps its outcome stream.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Stream tags used when deriving sub-seeds.
pub mod tag {
    pub const THETA: u64 = 0x7468_6574;
    pub const CONTEXT: u64 = 0x6374_7874;
    pub const ACTION: u64 = 0x6163_746e;
    pub const OUTCOME: u64 = 0x6f75_7463;
    pub const SOURCE_PICK: u64 = 0x7069_636b;
    pub const FOLDS: u64 = 0x666f_6c64;
    pub const CHUNK: u64 = 0x6368_6e6b;
    pub const COVER: u64 = 0x636f_7672;
    pub const POLICY: u64 = 0x706f_6c79;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for stream `tag` of item `index` under `master`.
pub fn sub_seed(master: u64, index: u64, tag: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(h ^ tag.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn stream(master: u64, index: u64, tag: u64) -> StreamRng {
    StreamRng::seed_from_u64(sub_seed(master, index, tag))
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Uniform on `[lo, hi)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Standard normal pair by the polar (Marsaglia) Box–Muller method.
pub fn standard_normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

/// Buffered standard normal sampler so no polar draw is wasted.
#[derive(Debug, Default)]
pub struct Normal {
    spare: Option<f64>,
}

impl Normal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = standard_normal_pair(rng);
        self.spare = Some(b);
        a
    }
}

/// Index drawn from a categorical distribution given by `probs`.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding slack: fall back to the last index with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_differ_by_tag_and_index() {
        let a = sub_seed(7, 0, tag::ACTION);
        let b = sub_seed(7, 0, tag::OUTCOME);
        let c = sub_seed(7, 1, tag::ACTION);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, sub_seed(7, 0, tag::ACTION));
    }

    #[test]
    fn polar_normal_moments() {
        let mut rng = seeded(11);
        let mut n = Normal::new();
        let m = 200_000;
        let xs: Vec<f64> = (0..m).map(|_| n.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn categorical_respects_zero_mass() {
        let mut rng = seeded(3);
        for _ in 0..1000 {
            assert_eq!(categorical(&mut rng, &[0.0, 1.0, 0.0]), 1);
        }
    }
}
