//! Self-expressive layers and every loss/gradient term that touches them.
//!
//! Samples are columns, so a latent `F` is `d x n` and self-expression reads
//! `F ~ F Z` with an `n x n` coefficient matrix whose diagonal is pinned at 0.

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weights of the four regularized terms of the joint objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Self-expression.
    pub lambda1: f64,
    /// Squared Frobenius norm of all coefficient matrices.
    pub lambda2: f64,
    /// Universality (pull each `Z_i` toward `Z`).
    pub lambda3: f64,
    /// HSIC diversity between view-specific matrices.
    pub lambda4: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 10.0,
            lambda2: 1.0,
            lambda3: 0.1,
            lambda4: 0.1,
        }
    }
}

/// Terms of the joint objective, each already multiplied by its weight, so
/// they add up to `total` and a zero weight logs an exact zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ae_loss: f64,
    pub selfexpr_loss: f64,
    pub lp_loss: f64,
    pub universality_loss: f64,
    pub diversity_loss: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Weights the raw term values and sums them.
    pub fn combine(ae: f64, selfexpr: f64, lp: f64, universality: f64, diversity: f64, w: &LossWeights) -> Self {
        let weighted = |lambda: f64, v: f64| if lambda == 0.0 { 0.0 } else { lambda * v };
        let selfexpr_loss = weighted(w.lambda1, selfexpr);
        let lp_loss = weighted(w.lambda2, lp);
        let universality_loss = weighted(w.lambda3, universality);
        let diversity_loss = weighted(w.lambda4, diversity);
        Self {
            ae_loss: ae,
            selfexpr_loss,
            lp_loss,
            universality_loss,
            diversity_loss,
            total: ae + selfexpr_loss + lp_loss + universality_loss + diversity_loss,
        }
    }

    pub fn first_non_finite(&self) -> Option<&'static str> {
        [
            ("auto-encoder", self.ae_loss),
            ("self-expression", self.selfexpr_loss),
            ("lp-norm", self.lp_loss),
            ("universality", self.universality_loss),
            ("diversity", self.diversity_loss),
            ("total", self.total),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(name, _)| name)
    }
}

/// Shared matrix `Z` plus one view-specific `Z_i` per view, all `n x n`
/// with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfExprState {
    pub common: Array2<f64>,
    pub views: Vec<Array2<f64>>,
}

impl SelfExprState {
    pub fn zeros(n: usize, n_views: usize) -> Self {
        Self {
            common: Array2::zeros((n, n)),
            views: vec![Array2::zeros((n, n)); n_views],
        }
    }

    /// Entries uniform on `[0, scale)` with the diagonal zeroed.
    pub fn random_uniform<R: Rng>(n: usize, n_views: usize, scale: f64, rng: &mut R) -> Self {
        let mut draw = || {
            let mut m = Array2::from_shape_fn((n, n), |_| rng.random::<f64>() * scale);
            zero_diag(&mut m);
            m
        };
        let common = draw();
        let views = (0..n_views).map(|_| draw()).collect();
        Self { common, views }
    }

    pub fn n_samples(&self) -> usize {
        self.common.nrows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn matrices(&self) -> impl Iterator<Item = &Array2<f64>> {
        std::iter::once(&self.common).chain(&self.views)
    }

    /// True iff every diagonal entry is exactly zero and all entries are finite.
    pub fn is_valid(&self) -> bool {
        self.matrices().all(|m| {
            m.is_square()
                && m.nrows() == self.n_samples()
                && m.diag().iter().all(|&d| d == 0.0)
                && m.iter().all(|v| v.is_finite())
        })
    }

    pub fn project(&mut self) {
        zero_diag(&mut self.common);
        for z in &mut self.views {
            zero_diag(z);
        }
    }
}

fn zero_diag(m: &mut Array2<f64>) {
    m.diag_mut().fill(0.0);
}

fn require_square(context: &'static str, m: &Array2<f64>, n: usize) -> Result<()> {
    if m.dim() != (n, n) {
        return Err(Error::dims(context, (n, n), m.dim()));
    }
    Ok(())
}

/// Returns `m` with its diagonal set to exactly zero.
pub fn project_zero_diag(m: &Array2<f64>) -> Result<Array2<f64>> {
    if !m.is_square() {
        return Err(Error::dims("zero-diagonal projection", "square", m.dim()));
    }
    let mut out = m.clone();
    zero_diag(&mut out);
    Ok(out)
}

/// `H = I - (1/N) 1 1^T`.
pub fn centering_matrix(n: usize) -> Array2<f64> {
    let mut h = Array2::from_elem((n, n), -1.0 / n as f64);
    h.diag_mut().mapv_inplace(|v| v + 1.0);
    h
}

/// `H M H`, computed by subtracting row and column means.
pub fn double_center(m: &Array2<f64>) -> Array2<f64> {
    let row_means = m.mean_axis(Axis(1)).expect("non-empty");
    let col_means = m.mean_axis(Axis(0)).expect("non-empty");
    let grand = m.mean().expect("non-empty");
    let mut out = m.clone();
    for ((i, j), v) in out.indexed_iter_mut() {
        *v += grand - row_means[i] - col_means[j];
    }
    out
}

/// `F - F Z`.
fn residual(f: &Array2<f64>, z: &Array2<f64>) -> Result<Array2<f64>> {
    require_square("self-expression coefficients", z, f.ncols())?;
    Ok(f - &f.dot(z))
}

/// `||F - F Z||_F^2`.
pub fn self_expression_residual(f: &Array2<f64>, z: &Array2<f64>) -> Result<f64> {
    Ok(residual(f, z)?.iter().map(|v| v * v).sum())
}

/// Empirical HSIC with the coefficient matrices used directly as Gram
/// matrices: `(n-1)^-2 tr(A H B H)`.
pub fn hsic(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let n = a.nrows();
    if n < 2 {
        return Err(Error::dims("hsic", "n >= 2", n));
    }
    require_square("hsic first argument", a, n)?;
    require_square("hsic second argument", b, n)?;
    let centered = double_center(b);
    // tr(A C) = sum_ij A_ij C_ji
    let trace: f64 = a.iter().zip(centered.t().iter()).map(|(x, y)| x * y).sum();
    Ok(trace / ((n - 1) as f64).powi(2))
}

/// Sum of HSIC over unordered pairs of view-specific matrices.
pub fn diversity_reg(views: &[Array2<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..views.len() {
        for j in i + 1..views.len() {
            total += hsic(&views[i], &views[j])?;
        }
    }
    Ok(total)
}

/// `sum_i ||Z - Z_i||_F^2`.
pub fn universality_reg(common: &Array2<f64>, views: &[Array2<f64>]) -> Result<f64> {
    let n = common.nrows();
    require_square("shared coefficients", common, n)?;
    views.iter().try_fold(0.0, |acc, zi| {
        require_square("view coefficients", zi, n)?;
        Ok(acc + (common - zi).iter().map(|v| v * v).sum::<f64>())
    })
}

/// `||Z||_F^2 + sum_i ||Z_i||_F^2`.
pub fn lp_reg(state: &SelfExprState) -> f64 {
    state.matrices().map(|m| m.iter().map(|v| v * v).sum::<f64>()).sum()
}

/// Forward quantities for one view, through both the view-specific network
/// (`*_specific`) and the shared network (`*_common`).
#[derive(Clone, Copy, Debug)]
pub struct ViewTerms<'a> {
    pub input: &'a Array2<f64>,
    pub latent_specific: &'a Array2<f64>,
    pub latent_common: &'a Array2<f64>,
    pub recon_specific: &'a Array2<f64>,
    pub recon_common: &'a Array2<f64>,
}

fn squared_distance(context: &'static str, a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::dims(context, a.dim(), b.dim()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Evaluates every term of the joint objective.
pub fn total_loss(views: &[ViewTerms<'_>], state: &SelfExprState, weights: &LossWeights) -> Result<LossBreakdown> {
    if views.len() != state.n_views() {
        return Err(Error::dims("view count", state.n_views(), views.len()));
    }
    let mut ae = 0.0;
    let mut selfexpr = 0.0;
    for (t, zi) in views.iter().zip(&state.views) {
        ae += squared_distance("specific reconstruction", t.input, t.recon_specific)?;
        ae += squared_distance("common reconstruction", t.input, t.recon_common)?;
        selfexpr += self_expression_residual(t.latent_specific, zi)?;
        selfexpr += self_expression_residual(t.latent_common, &state.common)?;
    }
    let lp = lp_reg(state);
    let universality = universality_reg(&state.common, &state.views)?;
    let diversity = diversity_reg(&state.views)?;
    Ok(LossBreakdown::combine(
        ae,
        selfexpr,
        lp,
        universality,
        diversity,
        weights,
    ))
}

/// Gradient of the objective with respect to `Z_i`, diagonal projected out:
/// `2 l1 F^T F (Z_i - I) - 2 l3 (Z - Z_i) + 2 l2 Z_i + l4 (n-1)^-2 sum_{j != i} (H Z_j H)^T`.
pub fn grad_z_view(
    view: usize,
    latent_specific: &Array2<f64>,
    state: &SelfExprState,
    weights: &LossWeights,
) -> Result<Array2<f64>> {
    let n = state.n_samples();
    let zi = state
        .views
        .get(view)
        .ok_or_else(|| Error::dims("view index", state.n_views(), view))?;
    if latent_specific.ncols() != n {
        return Err(Error::dims("latent columns", n, latent_specific.ncols()));
    }
    let gram = latent_specific.t().dot(latent_specific);
    let mut zi_minus_i = zi.clone();
    zi_minus_i.diag_mut().mapv_inplace(|v| v - 1.0);
    let mut g = gram.dot(&zi_minus_i) * (2.0 * weights.lambda1);
    g.scaled_add(-2.0 * weights.lambda3, &(&state.common - zi));
    g.scaled_add(2.0 * weights.lambda2, zi);
    if weights.lambda4 != 0.0 && n > 1 {
        let scale = weights.lambda4 / ((n - 1) as f64).powi(2);
        for (j, zj) in state.views.iter().enumerate() {
            if j != view {
                g.scaled_add(scale, &double_center(zj).t());
            }
        }
    }
    zero_diag(&mut g);
    Ok(g)
}

/// Gradient of the objective with respect to the shared `Z`, diagonal
/// projected out: `2 l1 sum_i F_i^T F_i (Z - I) + 2 l2 Z + 2 l3 sum_i (Z - Z_i)`.
pub fn grad_z_common(
    latents_common: &[&Array2<f64>],
    state: &SelfExprState,
    weights: &LossWeights,
) -> Result<Array2<f64>> {
    let n = state.n_samples();
    let mut gram = Array2::<f64>::zeros((n, n));
    for f in latents_common {
        if f.ncols() != n {
            return Err(Error::dims("latent columns", n, f.ncols()));
        }
        gram += &f.t().dot(*f);
    }
    let z = &state.common;
    let mut z_minus_i = z.clone();
    z_minus_i.diag_mut().mapv_inplace(|v| v - 1.0);
    let mut g = gram.dot(&z_minus_i) * (2.0 * weights.lambda1);
    g.scaled_add(2.0 * weights.lambda2, z);
    for zi in &state.views {
        g.scaled_add(2.0 * weights.lambda3, &(z - zi));
    }
    zero_diag(&mut g);
    Ok(g)
}

/// Gradient of `l1 ||F - F Z||_F^2` with respect to `F`: `2 l1 (F - F Z)(I - Z)^T`.
pub fn grad_latent(f: &Array2<f64>, z: &Array2<f64>, lambda1: f64) -> Result<Array2<f64>> {
    let r = residual(f, z)?;
    let mut i_minus_z = -z.t().to_owned();
    i_minus_z.diag_mut().mapv_inplace(|v| v + 1.0);
    Ok(r.dot(&i_minus_z) * (2.0 * lambda1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn residual_edge_cases() {
        let f = array![[1.0, 2.0], [3.0, -1.0]];
        let z = Array2::zeros((2, 2));
        assert_eq!(self_expression_residual(&f, &z).unwrap(), 15.0);
        let twins = array![[1.0, 1.0], [2.0, 2.0], [-3.0, -3.0]];
        let swap = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(self_expression_residual(&twins, &swap).unwrap(), 0.0);
        assert!(self_expression_residual(&f, &Array2::zeros((3, 3))).is_err());
    }

    #[test]
    fn centering_matrix_properties() {
        let h = centering_matrix(5);
        assert_eq!(h, h.t());
        let hh = h.dot(&h);
        assert!((&hh - &h).iter().all(|v| v.abs() < 1e-12));
        assert!(h.sum_axis(Axis(1)).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hsic_closed_forms() {
        let n = 3;
        let eye = Array2::<f64>::eye(n);
        assert!((hsic(&eye, &eye).unwrap() - 0.5).abs() < 1e-15);
        let constant = Array2::from_elem((4, 4), 2.5);
        let a = array![
            [0.0, 1.0, 2.0, 3.0],
            [1.0, 0.5, 0.0, 0.0],
            [4.0, 2.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 1.0]
        ];
        assert!(hsic(&a, &constant).unwrap().abs() < 1e-12);
        assert!(hsic(&Array2::zeros((1, 1)), &Array2::zeros((1, 1))).is_err());
        assert!(hsic(&a, &eye).is_err());
    }

    #[test]
    fn diversity_and_universality_edge_cases() {
        let z = array![[0.0, 1.0], [2.0, 0.0]];
        assert_eq!(diversity_reg(std::slice::from_ref(&z)).unwrap(), 0.0);
        let w = array![[0.0, -1.0], [0.5, 0.0]];
        assert_eq!(diversity_reg(&[z.clone(), w.clone()]).unwrap(), hsic(&z, &w).unwrap());
        assert_eq!(universality_reg(&z, &[z.clone(), z.clone()]).unwrap(), 0.0);
        let single = array![[0.0, 2.0], [0.0, 0.0]];
        assert_eq!(universality_reg(&Array2::zeros((2, 2)), &[single]).unwrap(), 4.0);
    }

    #[test]
    fn projection() {
        let eye = Array2::<f64>::eye(3);
        assert_eq!(project_zero_diag(&eye).unwrap(), Array2::<f64>::zeros((3, 3)));
        let m = array![[0.0, 1.0], [2.0, 0.0]];
        assert_eq!(project_zero_diag(&m).unwrap(), m);
        assert!(project_zero_diag(&Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn grad_latent_edge_cases() {
        let f = array![[1.0, 2.0, 0.5], [-1.0, 0.0, 3.0]];
        let g = grad_latent(&f, &Array2::zeros((3, 3)), 1.5).unwrap();
        assert_eq!(g, &f * 3.0);
        let twins = array![[1.0, 1.0], [2.0, 2.0]];
        let swap = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(grad_latent(&twins, &swap, 2.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_z_view_isolates_lp_term() {
        let n = 4;
        let mut zi = Array2::<f64>::eye(n);
        zi.diag_mut().fill(0.0);
        zi[[0, 1]] = 0.3;
        zi[[2, 3]] = -0.7;
        let state = SelfExprState {
            common: Array2::zeros((n, n)),
            views: vec![zi.clone(), Array2::from_elem((n, n), 0.2)],
        };
        let w = LossWeights {
            lambda1: 0.0,
            lambda2: 0.8,
            lambda3: 0.0,
            lambda4: 0.0,
        };
        let f = Array2::from_shape_fn((2, n), |(i, j)| (i * n + j) as f64);
        let g = grad_z_view(0, &f, &state, &w).unwrap();
        assert_eq!(g, &zi * 1.6);
    }

    #[test]
    fn grad_z_common_fixed_point() {
        let z = array![[0.0, 0.4, 0.1], [0.2, 0.0, -0.3], [0.5, 0.6, 0.0]];
        let state = SelfExprState {
            common: z.clone(),
            views: vec![z.clone(), z.clone()],
        };
        let w = LossWeights {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 5.0,
            lambda4: 1.0,
        };
        let f = Array2::ones((2, 3));
        let g = grad_z_common(&[&f, &f], &state, &w).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn breakdown_names_first_bad_term() {
        let w = LossWeights::default();
        let ok = LossBreakdown::combine(1.0, 2.0, 3.0, 4.0, 5.0, &w);
        assert_eq!(ok.total, 1.0 + 20.0 + 3.0 + 0.4 + 0.5);
        assert_eq!(ok.first_non_finite(), None);
        let bad = LossBreakdown::combine(1.0, 2.0, f64::NAN, 4.0, 5.0, &w);
        assert_eq!(bad.first_non_finite(), Some("lp-norm"));
    }
}
