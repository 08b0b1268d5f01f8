//! Deterministic random source shared by pattern, noise and ordering code.
//!
//! Everything is derived from ChaCha8 seeded with a 64-bit value via
//! `seed_from_u64`, and each consumer uses its own stream number so that
//! e.g. the noise draws never depend on how many pattern bits were drawn.
//! Derived variates use explicit formulas (bit extraction, 53-bit uniforms,
//! Box-Muller, rejection sampling) so another implementation can reproduce
//! them from the raw ChaCha8 output.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used for random pattern entries.
pub const STREAM_PATTERNS: u64 = 0;
/// Stream used for bucket noise.
pub const STREAM_NOISE: u64 = 1;
/// Stream used for seeded row permutations.
pub const STREAM_ORDER: u64 = 2;

pub struct DetRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl DetRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound). `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        // reject the tail so every residue is equally likely
        let zone = u64::MAX - (u64::MAX % bound) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % bound;
            }
        }
    }

    /// Standard normal via the Box-Muller transform; draws come in pairs.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Unit-mean exponential variate.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    /// Fill `out` with fair bits, 64 per draw, least significant bit first.
    pub fn fill_bits(&mut self, out: &mut [u8]) {
        for chunk in out.chunks_mut(64) {
            let word = self.next_u64();
            for (i, b) in chunk.iter_mut().enumerate() {
                *b = ((word >> i) & 1) as u8;
            }
        }
    }

    /// Fisher-Yates permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }
}
