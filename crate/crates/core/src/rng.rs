//! Deterministic pseudo-random numbers.
//!
//! The generator is xoshiro256++ (Blackman & Vigna), seeded from a single
//! `u64` via splitmix64. Both algorithms are implemented here verbatim from
//! their published reference code, so a given seed produces the same stream
//! on every platform and toolchain. Gaussian draws use the Box-Muller
//! transform on top of the uniform stream.

use crate::tensor::Tensor;

/// Seedable xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
}

#[inline]
fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl Rng {
    /// Expand a 64-bit seed into the full generator state with splitmix64.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut s = seed;
        Rng {
            state: [
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
            ],
        }
    }

    /// Derive an independent generator for a named stream. Keeps the data
    /// generator, teacher init, and student init decoupled so changing one
    /// consumer does not shift the others.
    pub fn derive(seed: u64, stream: u64) -> Self {
        Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller. Uses 1 - u to keep the log
    /// argument in (0, 1].
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Unbiased integer in [0, n) by bitmask rejection.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is undefined");
        let n = n as u64;
        let mask = u64::MAX >> (n - 1).leading_zeros().min(63);
        loop {
            let v = self.next_u64() & mask;
            if v < n {
                return v as usize;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Tensor of i.i.d. N(0, sigma^2) entries, filled in row-major order.
    pub fn normal_tensor(&mut self, dims: &[usize], sigma: f64) -> Tensor {
        let mut t = Tensor::zeros(dims);
        for v in t.data_mut() {
            *v = sigma * self.normal();
        }
        t
    }

    /// Choose k distinct indices from [0, n), returned in ascending order.
    pub fn distinct_below(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot pick {k} distinct values below {n}");
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        let mut picked: Vec<usize> = idx.into_iter().take(k).collect();
        picked.sort_unstable();
        picked
    }
}
