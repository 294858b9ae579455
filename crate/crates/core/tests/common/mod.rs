#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-5;
/// Entries smaller than this are compared on an absolute scale, since central
/// differences carry roughly `eps * |f| / h` of rounding noise.
pub const FD_FLOOR: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

pub fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

pub fn zero_diagonal(mut m: Array2<f64>) -> Array2<f64> {
    m.diag_mut().fill(0.0);
    m
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Central difference of `f` along every coordinate of `x`, skipping indices
/// for which `skip` returns true. Returns the worst relative error.
pub fn fd_worst(
    x: &mut [f64],
    analytic: &[f64],
    skip: impl Fn(usize) -> bool,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        if skip(i) {
            continue;
        }
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up = f(x);
        x[i] = orig - FD_STEP;
        let down = f(x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

/// `tr(A H B H) / (n-1)^2` by explicit index loops, with `H` materialized.
pub fn hsic_brute(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let h = |i: usize, j: usize| (if i == j { 1.0 } else { 0.0 }) - 1.0 / n as f64;
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    trace += a[[i, j]] * h(j, k) * b[[k, l]] * h(l, i);
                }
            }
        }
    }
    trace / ((n - 1) as f64).powi(2)
}

/// Labels for `k` blocks of the given sizes, in order.
pub fn block_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect()
}
