//! Seeded, platform-independent randomness based on the splitmix64 recurrence.

use crate::error::{Error, Result};

/// Deterministic 64-bit generator. Identical seeds yield identical streams
/// on every platform, which keeps whole training runs reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Current state, for checkpointing. `from_state` resumes the identical stream.
    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn from_state(state: u64) -> Self {
        Rng { state }
    }

    /// Next raw 64-bit output of the splitmix64 recurrence.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) using the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (two uniforms per call, no caching).
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.uniform() * n as f64) as usize % n
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Derive an independent child generator from this stream.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }
}

/// Draw an index with probability `probs[i]` by inverse CDF on one uniform.
///
/// If accumulated rounding leaves the cumulative scan short of the draw,
/// the last index is returned, so the result is always in range.
pub fn sample_categorical(rng: &mut Rng, probs: &[f64]) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !(p >= 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite entry {p} at index {i}"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {sum}, expected 1 within 1e-9"
        )));
    }
    let u = rng.uniform();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_vectors() {
        // First outputs of the published splitmix64 recurrence.
        let expect: [(u64, [u64; 4]); 2] = [
            (
                0,
                [
                    0xe220a8397b1dcdaf,
                    0x6e789e6aa1b965f4,
                    0x06c45d188009454f,
                    0xf88bb8a8724c81ec,
                ],
            ),
            (
                1,
                [
                    0x910a2dec89025cc1,
                    0xbeeb8da1658eec67,
                    0xf893a2eefb32555e,
                    0x71c18690ee42c90b,
                ],
            ),
        ];
        for (seed, outs) in expect {
            let mut rng = Rng::new(seed);
            for o in outs {
                assert_eq!(rng.next_u64(), o);
            }
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_seeds_diverge_quickly() {
        let mut a = Rng::new(1);
        let mut b = Rng::new(2);
        let diverged = (0..4).any(|_| a.next_u64() != b.next_u64());
        assert!(diverged);
    }

    #[test]
    fn uniform_stays_in_unit_interval() {
        let mut rng = Rng::new(3);
        for _ in 0..100_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn state_restore_resumes_stream() {
        let mut rng = Rng::new(99);
        for _ in 0..17 {
            rng.next_u64();
        }
        let snapshot = rng.state();
        let tail: Vec<u64> = (0..50).map(|_| rng.next_u64()).collect();
        let mut resumed = Rng::from_state(snapshot);
        let resumed_tail: Vec<u64> = (0..50).map(|_| resumed.next_u64()).collect();
        assert_eq!(tail, resumed_tail);
    }

    #[test]
    fn categorical_degenerate_always_hits_unit_mass() {
        let mut rng = Rng::new(0);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&mut rng, &[0.0, 1.0, 0.0]).unwrap(), 1);
        }
    }

    #[test]
    fn categorical_half_half_frequency() {
        let mut rng = Rng::new(0);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sample_categorical(&mut rng, &[0.5, 0.5]).unwrap() == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn categorical_rejects_bad_input() {
        let mut rng = Rng::new(0);
        assert!(matches!(
            sample_categorical(&mut rng, &[]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            sample_categorical(&mut rng, &[0.3, -0.1, 0.8]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            sample_categorical(&mut rng, &[0.3, 0.3]),
            Err(Error::InvalidDistribution(_))
        ));
    }
}
