//! Seeded random sampling for property checks and point draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Mat;
use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[-1, 1)`.
pub fn uniform<T: Real>(rng: &mut impl Rng) -> T {
    T::lit(rng.gen_range(-1.0..1.0))
}

pub fn random_vector<T: Real>(rng: &mut impl Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| uniform(rng)).collect()
}

pub fn random_vectors<T: Real>(rng: &mut impl Rng, n: usize, count: usize) -> Vec<Vec<T>> {
    (0..count).map(|_| random_vector(rng, n)).collect()
}

pub fn random_matrix<T: Real>(rng: &mut impl Rng, n: usize) -> Mat<T> {
    Mat::from_fn(n, n, |_, _| uniform(rng))
}
