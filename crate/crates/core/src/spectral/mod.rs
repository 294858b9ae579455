//! From a learned coefficient matrix to cluster labels.

mod eig;
mod kmeans;

pub use eig::{symmetric_eig, symmetric_eig_smallest, EigenPairs, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};
pub use kmeans::{kmeans, lloyd, KMeansResult, DEFAULT_MAX_ITER, DEFAULT_RESTARTS};

use ndarray::Array2;

use crate::{Error, Result};

/// Symmetric, entrywise non-negative affinity.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix(Array2<f64>);

impl AffinityMatrix {
    /// Wraps an existing matrix after checking symmetry and non-negativity.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("affinity", "square", a.dim()));
        }
        let n = a.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = a[[i, j]];
                if !(v >= 0.0 && v.is_finite()) || v != a[[j, i]] {
                    return Err(Error::InvalidDataset(format!(
                        "affinity must be symmetric, finite and non-negative (entry {i},{j} = {v})"
                    )));
                }
            }
        }
        Ok(Self(a))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// `(|Z| + |Z|^T) / 2`.
pub fn build_affinity(z: &Array2<f64>) -> Result<AffinityMatrix> {
    if !z.is_square() {
        return Err(Error::dims("affinity source", "square", z.dim()));
    }
    let n = z.nrows();
    let a = Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (z[[i, j]].abs() + z[[j, i]].abs()));
    Ok(AffinityMatrix(a))
}

/// `L = I - D^-1/2 A D^-1/2`; isolated vertices contribute a zero row/column
/// to the normalized adjacency.
pub fn normalized_laplacian(a: &AffinityMatrix) -> Array2<f64> {
    let a = a.as_array();
    let n = a.nrows();
    let inv_sqrt: Vec<f64> = a
        .rows()
        .into_iter()
        .map(|r| {
            let d: f64 = r.sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut l = Array2::from_shape_fn((n, n), |(i, j)| -inv_sqrt[i] * a[[i, j]] * inv_sqrt[j]);
    l.diag_mut().mapv_inplace(|v| v + 1.0);
    l
}

/// Row-normalized eigenvectors of the `k` smallest Laplacian eigenvalues.
pub fn spectral_embedding(a: &AffinityMatrix, k: usize) -> Result<Array2<f64>> {
    let eig = symmetric_eig_smallest(&normalized_laplacian(a), k)?;
    let mut u = eig.vectors;
    for mut row in u.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    Ok(u)
}

/// Normalized spectral clustering with 50 k-means++ restarts.
pub fn spectral_cluster(a: &AffinityMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > a.n() {
        return Err(Error::InvalidConfig(format!(
            "cluster count {k} must lie in 2..={}",
            a.n()
        )));
    }
    let embedding = spectral_embedding(a, k)?;
    Ok(kmeans(&embedding, k, DEFAULT_RESTARTS, DEFAULT_MAX_ITER, seed).labels)
}
