//! Seeded randomness for noise injection, splitting and synthetic data.
//!
//! Every draw goes through ChaCha8 (`rand_chacha`, seeded with
//! `seed_from_u64`) and the raw `next_u64` stream, so outputs depend only on
//! the ChaCha8 keystream and the arithmetic below. Independent purposes use
//! distinct ChaCha stream ids on the same seed.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids for the independent consumers of one experiment seed.
pub mod stream {
    pub const NOISE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const SYNTH: u64 = 3;
}

#[derive(Debug, Clone)]
pub struct PortableRng(ChaCha8Rng);

impl PortableRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        PortableRng(rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n` by rejection sampling. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box–Muller, cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct elements of `pool`, uniformly without replacement, in draw order.
    pub fn sample_without_replacement<T: Copy>(&mut self, pool: &[T], k: usize) -> Vec<T> {
        let mut scratch = pool.to_vec();
        let k = k.min(scratch.len());
        for i in 0..k {
            let j = i + self.below((scratch.len() - i) as u64) as usize;
            scratch.swap(i, j);
        }
        scratch.truncate(k);
        scratch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = PortableRng::new(42, stream::NOISE);
        let mut b = PortableRng::new(42, stream::NOISE);
        for _ in 0..10 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = PortableRng::new(42, stream::NOISE);
        let mut b = PortableRng::new(42, stream::SPLIT);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut rng = PortableRng::new(0, 0);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let x = rng.below(7) as usize;
            seen[x] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn sample_is_distinct_subset() {
        let mut rng = PortableRng::new(9, 0);
        let pool: Vec<usize> = (10..30).collect();
        let s = rng.sample_without_replacement(&pool, 5);
        assert_eq!(s.len(), 5);
        let mut sorted = s.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        assert!(s.iter().all(|x| pool.contains(x)));
        assert_eq!(rng.sample_without_replacement(&pool, 50).len(), 20);
    }
}
