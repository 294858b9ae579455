//! Cyclic Jacobi eigendecomposition for dense symmetric matrices.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for ((i, j), v) in a.indexed_iter() {
        if i != j {
            s += v * v;
        }
    }
    s.sqrt()
}

/// Full eigendecomposition of a symmetric matrix. Sweeps stop once the
/// off-diagonal Frobenius norm falls below `1e-12 * ||M||_F`.
pub fn symmetric_eig(m: &Array2<f64>) -> Result<EigenPairs> {
    if !m.is_square() {
        return Err(Error::dims("symmetric eigensolver", "square", m.dim()));
    }
    let n = m.nrows();
    let mut a = m.to_owned();
    // Symmetrize so rounding asymmetry in the caller cannot bias rotations.
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = avg;
            a[[j, i]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = OFF_DIAGONAL_TOLERANCE * scale.max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps index order among ties.
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    Ok(EigenPairs { values, vectors })
}

/// Applies the Jacobi rotation `J(p, q, c, s)` as `A <- J^T A J`, `V <- V J`.
fn rotate(a: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = c * akp - s * akq;
        a[[k, q]] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = c * apk - s * aqk;
        a[[q, k]] = s * apk + c * aqk;
    }
    a[[p, q]] = 0.0;
    a[[q, p]] = 0.0;
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// The `k` smallest eigenpairs, ascending.
pub fn symmetric_eig_smallest(m: &Array2<f64>, k: usize) -> Result<EigenPairs> {
    let all = symmetric_eig(m)?;
    if k > all.values.len() {
        return Err(Error::dims("eigenpair count", format!("<= {}", all.values.len()), k));
    }
    Ok(EigenPairs {
        values: all.values.slice(ndarray::s![..k]).to_owned(),
        vectors: all.vectors.slice(ndarray::s![.., ..k]).to_owned(),
    })
}
