//! Seedable random source.
//!
//! The generator is PCG32 (`Lcg64Xsh32`, O'Neill 2014): 64-bit LCG state with
//! an XSH-RR output permutation. Outputs are therefore identical on every
//! platform. Conversions are fixed:
//!
//! * unit float: the top 53 bits of `next_u64` scaled by `2^-53`, in `[0, 1)`;
//! * normal: Box–Muller on two unit draws (`u1` mapped to `(0, 1]`), cosine branch only,
//!   transcendental functions from `libm`;
//! * bounded integer: Lemire's widening-multiply method with rejection.
//!
//! Child streams come from [`Rng::split`], which derives the child seed from
//! the parent's *key* (the seed lineage), never from the parent's position.

use rand_core::{Rng as _, SeedableRng};
use rand_pcg::Pcg32;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Rng {
    key: u64,
    inner: Pcg32,
}

/// SplitMix64 finalizer; used to decorrelate derived keys.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a, for turning string labels into split keys.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { key: seed, inner: Pcg32::seed_from_u64(seed) }
    }

    /// The key this stream was seeded from.
    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent child stream for `label`; does not advance `self`.
    pub fn split(&self, label: u64) -> Rng {
        Rng::new(mix64(self.key ^ mix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }

    pub fn split_str(&self, label: &str) -> Rng {
        self.split(label_hash(label))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; `lo == hi` returns `lo`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(alloc::format!("uniform interval [{lo}, {hi}) is empty")));
        }
        Ok(self.uniform_unchecked(lo, hi))
    }

    #[inline]
    pub(crate) fn uniform_unchecked(&mut self, lo: f64, hi: f64) -> f64 {
        let v = lo + (hi - lo) * self.unit();
        if v >= hi && hi > lo {
            hi.next_down()
        } else {
            v
        }
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// `true` with probability `p` (clamped into `[0, 1]`). `p = 0` never fires, `p = 1` always does.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }
}
