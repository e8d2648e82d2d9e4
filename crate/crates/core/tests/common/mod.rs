#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volterra_core::simplex::{FaceIndexSet, SimplexPoint};
use volterra_core::skew::{DenseSkew, SkewSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries are multiples of 2^-32 in [-1, 1].
pub fn dyadic_dense<R: Rng>(rng: &mut R, n: usize) -> DenseSkew {
    let scale = (1u64 << 32) as f64;
    DenseSkew::from_upper(n, |_, _| {
        rng.random_range(-(1i64 << 32)..=(1i64 << 32)) as f64 / scale
    })
}

pub fn interior<R: Rng>(rng: &mut R, n: usize) -> SimplexPoint {
    SimplexPoint::sample_interior_with(&FaceIndexSet::initial(n).unwrap(), rng)
}

/// Textbook evaluation of `x_k (1 + Σ_i a_ki x_i)` on dense vectors.
pub fn naive_volterra(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|k| x[k] * (1.0 + (0..x.len()).map(|i| a[k][i] * x[i]).sum::<f64>()))
        .collect()
}

pub fn dense_rows(spec: &SkewSpec, n: usize) -> Vec<Vec<f64>> {
    spec.truncate(n).rows()
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
