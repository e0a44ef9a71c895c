#![allow(dead_code)]

use cur_core::bounds::PerturbedInstance;
use cur_core::linalg::orthonormalize;
use cur_core::{DenseMatrix, IndexSet};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng))
}

/// Rank-`k` matrix `Q1 diag(s) Q2^T` with singular values log-uniform in
/// `[1e-2, 1]` times a random scale, so conditioning varies.
pub fn low_rank(m: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let q1 = orthonormalize(&gaussian(m, k, rng));
    let q2 = orthonormalize(&gaussian(n, k, rng));
    let scale = 10f64.powf(rng.random_range(-1.0..2.0));
    let s: Vec<f64> = (0..k)
        .map(|_| scale * 10f64.powf(rng.random_range(-2.0..0.0)))
        .collect();
    q1.matmul(&DenseMatrix::from_diag(&s))
        .matmul(&q2.transpose())
}

/// `count` distinct indices from `0..n`.
pub fn distinct(n: usize, count: usize, rng: &mut ChaCha8Rng) -> IndexSet {
    IndexSet::new(sample(rng, n, count).into_vec(), n).unwrap()
}

/// `count` indices drawn with replacement.
pub fn with_replacement(n: usize, count: usize, rng: &mut ChaCha8Rng) -> IndexSet {
    IndexSet::new((0..count).map(|_| rng.random_range(0..n)).collect(), n).unwrap()
}

/// Gaussian noise with spectral norm `delta * sigma_k(A)`.
pub fn scaled_noise(a: &DenseMatrix, k: usize, delta: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let sk = cur_core::linalg::singular_values(a)[k - 1];
    let g = gaussian(a.rows(), a.cols(), rng);
    let g2 = cur_core::linalg::spectral_norm(&g);
    g.scale(delta * sk / g2)
}

/// A random perturbed CUR instance satisfying rank(C) = rank(U) = rank(R) = k.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_dim: usize,
    max_k: usize,
    log_delta: (f64, f64),
) -> PerturbedInstance {
    loop {
        let k = rng.random_range(1..=max_k);
        let m = rng.random_range(k + 1..=max_dim);
        let n = rng.random_range(k + 1..=max_dim);
        let a = low_rank(m, n, k, rng);
        let delta = 10f64.powf(rng.random_range(log_delta.0..log_delta.1));
        let e = scaled_noise(&a, k, delta, rng);
        let si = rng.random_range(k..=m);
        let sj = rng.random_range(k..=n);
        let (rows, cols) = if rng.random_bool(0.25) {
            (with_replacement(m, si, rng), with_replacement(n, sj, rng))
        } else {
            (distinct(m, si, rng), distinct(n, sj, rng))
        };
        let inst = PerturbedInstance::new(&a, &e, k, &rows, &cols).unwrap();
        if inst.standing_assumptions_hold() {
            return inst;
        }
    }
}
