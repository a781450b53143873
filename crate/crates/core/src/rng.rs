//! Seeded random source and the primitive draws every sampler builds on.
//!
//! Runs use [`ChaCha8Rng`] seeded through `SeedableRng::seed_from_u64`. All
//! derived draws are defined here so that a port to another language can
//! reproduce a chain draw for draw:
//!
//! * `uniform`: `(next_u64 >> 11) * 2^-53`, a value in `[0, 1)`.
//! * `standard_normal`: Box-Muller on two uniforms `u1, u2`, returning
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`. The sine branch is discarded.
//! * `uniform_index(n)`: `floor(uniform * n)`, clamped to `n - 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = uniform(rng);
    let u2 = uniform(rng);
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[inline]
pub fn uniform_index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    ((uniform(rng) * n as f64) as usize).min(n - 1)
}

/// Partial Fisher-Yates: `k` distinct indices from `0..n` (all of them when `k >= n`).
pub fn sample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let k = k.min(n);
    for i in 0..k {
        let j = i + uniform_index(rng, n - i);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}
