use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::DenseMatrix;

pub fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
}

pub fn low_rank(m: usize, n: usize, r: usize, seed: u64) -> DenseMatrix {
    gaussian(m, r, seed).matmul(&gaussian(r, n, seed.wrapping_add(7919)))
}
