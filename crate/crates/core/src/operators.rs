//! Banded difference matrices and the per-step composite operators.
//!
//! `A` is the second difference with Neumann ghost-node elimination, `Θ` the
//! centered x-gradient weighted by `λ_j = λ / x_j` (applied from the left) and
//! `Λ` the centered y-gradient weighted by `γ_m = γ / y_m` (applied from the
//! right). The y-Laplacian is realised as `X·Aᵀ` because the Neumann rows make
//! `A` non-symmetric.

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

use crate::grid::Grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: operator has size {operator}, field is {field:?}")]
    DimensionMismatch { operator: usize, field: (usize, usize) },
    #[error("time level {n} has t_n = {t_n}; the damping coefficient a/t_n is singular")]
    SingularTime { n: usize, t_n: f64 },
}

/// Square tridiagonal matrix in banded storage.
///
/// `sub[i]` is entry `(i + 1, i)`, `sup[i]` is entry `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TriDiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        m.diag.fill(1.0);
        m
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.sub[j]
        } else if j == i + 1 {
            self.sup[i]
        } else {
            0.0
        }
    }

    /// `alpha·self + beta·I`.
    pub fn scale_shift(&self, alpha: f64, beta: f64) -> Self {
        Self {
            sub: self.sub.iter().map(|v| alpha * v).collect(),
            diag: self.diag.iter().map(|v| alpha * v + beta).collect(),
            sup: self.sup.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            sub: self.sup.clone(),
            diag: self.diag.clone(),
            sup: self.sub.clone(),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.size();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = self.diag[i];
            if i + 1 < n {
                m[[i + 1, i]] = self.sub[i];
                m[[i, i + 1]] = self.sup[i];
            }
        }
        m
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let mut s = self.diag[i];
        if i > 0 {
            s += self.sub[i - 1];
        }
        if i + 1 < self.size() {
            s += self.sup[i];
        }
        s
    }

    fn check(&self, x: &ArrayView2<f64>, along_rows: bool) -> Result<(), OperatorError> {
        let (r, c) = x.dim();
        let k = if along_rows { r } else { c };
        if k != self.size() {
            return Err(OperatorError::DimensionMismatch {
                operator: self.size(),
                field: (r, c),
            });
        }
        Ok(())
    }
}

/// `M·X`: differences along x (rows).
pub fn apply_x(m: &TriDiag, x: &Array2<f64>) -> Result<Array2<f64>, OperatorError> {
    m.check(&x.view(), true)?;
    let (n, cols) = x.dim();
    let mut out = Array2::zeros((n, cols));
    for i in 0..n {
        let d = m.diag[i];
        for c in 0..cols {
            out[[i, c]] = d * x[[i, c]];
        }
        if i > 0 {
            let s = m.sub[i - 1];
            if s != 0.0 {
                for c in 0..cols {
                    out[[i, c]] += s * x[[i - 1, c]];
                }
            }
        }
        if i + 1 < n {
            let s = m.sup[i];
            if s != 0.0 {
                for c in 0..cols {
                    out[[i, c]] += s * x[[i + 1, c]];
                }
            }
        }
    }
    Ok(out)
}

/// `X·M`: differences along y (columns).
pub fn apply_y(x: &Array2<f64>, m: &TriDiag) -> Result<Array2<f64>, OperatorError> {
    m.check(&x.view(), false)?;
    let (rows, n) = x.dim();
    let mut out = Array2::zeros((rows, n));
    for r in 0..rows {
        for c in 0..n {
            // (X M)[r, c] = X[r, c-1] M[c-1, c] + X[r, c] M[c, c] + X[r, c+1] M[c+1, c]
            let mut s = x[[r, c]] * m.diag[c];
            if c > 0 {
                s += x[[r, c - 1]] * m.sup[c - 1];
            }
            if c + 1 < n {
                s += x[[r, c + 1]] * m.sub[c];
            }
            out[[r, c]] = s;
        }
    }
    Ok(out)
}

/// `M·X + X·N`.
pub fn apply_sylvester(m: &TriDiag, x: &Array2<f64>, n: &TriDiag) -> Result<Array2<f64>, OperatorError> {
    Ok(apply_x(m, x)? + apply_y(x, n)?)
}

/// The fixed difference matrices for one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub a: TriDiag,
    /// `Aᵀ`, used on the right for the y-direction.
    pub a_t: TriDiag,
    pub theta: TriDiag,
    pub lambda: TriDiag,
    /// `λ_j = λ / x_j`, zero at singular nodes.
    pub lambda_j: Vec<f64>,
    /// `γ_m = γ / y_m`, zero at singular nodes.
    pub gamma_m: Vec<f64>,
    /// Node indices whose coefficient was zeroed.
    pub singular_nodes: Vec<usize>,
}

/// Treatment of `(2λ/x) ∂_x` at nodes flagged singular (`|x| ≤ sing_eps`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Drop the term.
    #[default]
    Zero,
    /// Replace it by its limit `2λ ∂_x²` for fields with `∂_x v = 0` there.
    Limit,
}

fn weights(nodes: &[f64], coeff: f64, grid: &Grid) -> Vec<f64> {
    nodes
        .iter()
        .map(|&x| if x.abs() <= grid.sing_eps { 0.0 } else { coeff / x })
        .collect()
}

pub fn build_operator_set(grid: &Grid, lambda: f64, gamma: f64) -> OperatorSet {
    build_operator_set_with(grid, lambda, gamma, SingularPolicy::Zero)
}

pub fn build_operator_set_with(grid: &Grid, lambda: f64, gamma: f64, policy: SingularPolicy) -> OperatorSet {
    let n = grid.size();
    let last = n - 1;

    let mut a = TriDiag::zeros(n);
    a.diag.fill(-2.0);
    a.sub.fill(1.0);
    a.sup.fill(1.0);
    // Neumann ghost elimination: z_{-1} = z_1, z_{J+2} = z_J.
    a.sup[0] = 2.0;
    a.sub[last - 1] = 2.0;

    let lambda_j = weights(&grid.x, lambda, grid);
    let gamma_m = weights(&grid.y, gamma, grid);

    // Θ row j (interior): Θ[j, j+1] = λ_j, Θ[j, j-1] = -λ_j; boundary rows zero.
    let mut theta = TriDiag::zeros(n);
    for j in 1..last {
        theta.sup[j] = lambda_j[j];
        theta.sub[j - 1] = -lambda_j[j];
    }

    // Λ column m (interior): Λ[m+1, m] = γ_m, Λ[m-1, m] = -γ_m; boundary columns zero.
    let mut lam = TriDiag::zeros(n);
    for m in 1..last {
        lam.sub[m] = gamma_m[m];
        lam.sup[m - 1] = -gamma_m[m];
    }

    if policy == SingularPolicy::Limit {
        let h = grid.h;
        for j in 1..last {
            if grid.x[j].abs() <= grid.sing_eps {
                theta.sup[j] = 2.0 * lambda / h;
                theta.sub[j - 1] = 2.0 * lambda / h;
                theta.diag[j] = -4.0 * lambda / h;
            }
        }
        for m in 1..last {
            if grid.y[m].abs() <= grid.sing_eps {
                lam.sub[m] = 2.0 * gamma / h;
                lam.sup[m - 1] = 2.0 * gamma / h;
                lam.diag[m] = -4.0 * gamma / h;
            }
        }
    }

    OperatorSet {
        a_t: a.transpose(),
        a,
        theta,
        lambda: lam,
        lambda_j,
        gamma_m,
        singular_nodes: grid.singular_nodes.clone(),
    }
}

/// Composite operators for the step producing level `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOperators {
    pub n: usize,
    /// `a / t_n`.
    pub a_n: f64,
    /// `W_α = I/2 − α σ A`.
    pub w_alpha: TriDiag,
    /// `W_{α−1/2}`.
    pub w_alpha_minus_half: TriDiag,
    /// `R_{n,α} = (l a_n / 2) I − α σ h Θ`.
    pub r_pos: TriDiag,
    /// `S_{n,α} = (l a_n / 2) I − α σ h Λ`.
    pub s_pos: TriDiag,
    /// `R_{n,−α}`.
    pub r_neg: TriDiag,
    /// `S_{n,−α}`.
    pub s_neg: TriDiag,
}

pub fn assemble_step_operators(
    ops: &OperatorSet,
    grid: &Grid,
    n: usize,
    alpha: f64,
    a: f64,
) -> Result<StepOperators, OperatorError> {
    let t_n = grid.time(n);
    if !(t_n > 0.0) {
        return Err(OperatorError::SingularTime { n, t_n });
    }
    let a_n = a / t_n;
    let sigma = grid.sigma;
    let h = grid.h;
    let damp = 0.5 * grid.l * a_n;
    Ok(StepOperators {
        n,
        a_n,
        w_alpha: ops.a.scale_shift(-alpha * sigma, 0.5),
        w_alpha_minus_half: ops.a.scale_shift(-(alpha - 0.5) * sigma, 0.5),
        r_pos: ops.theta.scale_shift(-alpha * sigma * h, damp),
        s_pos: ops.lambda.scale_shift(-alpha * sigma * h, damp),
        r_neg: ops.theta.scale_shift(alpha * sigma * h, damp),
        s_neg: ops.lambda.scale_shift(alpha * sigma * h, damp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, sample, GridSpec, StepRule};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn dense_mul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        a.dot(b)
    }

    #[test]
    fn neumann_matrix_at_j2() {
        let grid = build_grid(&GridSpec::new(0.0, 3.0, 2)).unwrap();
        let ops = build_operator_set(&grid, 0.7, 0.3);
        let expected = array![
            [-2.0, 2.0, 0.0, 0.0],
            [1.0, -2.0, 1.0, 0.0],
            [0.0, 1.0, -2.0, 1.0],
            [0.0, 0.0, 2.0, -2.0]
        ];
        assert_eq!(ops.a.to_dense(), expected);
        for i in 0..4 {
            assert_eq!(ops.a.row_sum(i), 0.0);
        }
    }

    #[test]
    fn zero_lambda_gives_zero_theta() {
        let grid = build_grid(&GridSpec::new(-1.0, 2.0, 5)).unwrap();
        let ops = build_operator_set(&grid, 0.0, 0.0);
        assert!(ops.theta.to_dense().iter().all(|&v| v == 0.0));
        assert!(ops.lambda.to_dense().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_node_weight_is_zeroed() {
        let grid = build_grid(&GridSpec::new(-10.0, 10.0, 49)).unwrap();
        let ops = build_operator_set(&grid, 0.25, 0.25);
        assert_eq!(ops.lambda_j[25], 0.0);
        assert_eq!(ops.gamma_m[25], 0.0);
        assert_eq!(ops.theta.get(25, 26), 0.0);
        assert_eq!(ops.theta.get(25, 24), 0.0);
        assert_relative_eq!(ops.lambda_j[24], 0.25 / -0.4, max_relative = 1e-12);
        assert_eq!(ops.singular_nodes, vec![25]);
    }

    #[test]
    fn theta_and_lambda_structure() {
        let grid = build_grid(&GridSpec::new(0.5, 3.5, 4)).unwrap();
        let ops = build_operator_set(&grid, 0.4, -0.9);
        let n = grid.size();
        let th = ops.theta.to_dense();
        let la = ops.lambda.to_dense();
        for k in 0..n {
            assert_eq!(th[[k, k]], 0.0);
            assert_eq!(la[[k, k]], 0.0);
        }
        for c in 0..n {
            assert_eq!(th[[0, c]], 0.0);
            assert_eq!(th[[n - 1, c]], 0.0);
            assert_eq!(la[[c, 0]], 0.0);
            assert_eq!(la[[c, n - 1]], 0.0);
        }
        for j in 1..n - 1 {
            assert_eq!(th[[j, j + 1]], -th[[j, j - 1]]);
            assert_relative_eq!(th[[j, j + 1]], 0.4 / grid.x[j]);
            assert_eq!(la[[j + 1, j]], -la[[j - 1, j]]);
            assert_relative_eq!(la[[j + 1, j]], -0.9 / grid.y[j]);
        }
    }

    #[test]
    fn banded_products_match_dense() {
        let grid = build_grid(&GridSpec::new(0.5, 3.5, 4)).unwrap();
        let ops = build_operator_set(&grid, 0.4, -0.9);
        let n = grid.size();
        let x = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        for m in [&ops.a, &ops.a_t, &ops.theta, &ops.lambda] {
            let dense = m.to_dense();
            let left = apply_x(m, &x).unwrap();
            let right = apply_y(&x, m).unwrap();
            assert!((&left - &dense_mul(&dense, &x)).iter().all(|d| d.abs() < 1e-14));
            assert!((&right - &dense_mul(&x, &dense)).iter().all(|d| d.abs() < 1e-14));
        }
    }

    #[test]
    fn identity_is_neutral_and_a_kills_constants() {
        let x = Array2::from_shape_fn((4, 4), |(i, j)| (i as f64) - 0.5 * j as f64);
        let id = TriDiag::identity(4);
        assert_eq!(apply_x(&id, &x).unwrap(), x);
        assert_eq!(apply_y(&x, &id).unwrap(), x);

        let grid = build_grid(&GridSpec::new(0.0, 3.0, 2)).unwrap();
        let ops = build_operator_set(&grid, 0.0, 0.0);
        let c = Array2::from_elem((4, 4), 3.25);
        assert!(apply_x(&ops.a, &c).unwrap().iter().all(|&v| v == 0.0));
        assert!(apply_y(&c, &ops.a_t).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_difference_of_squares() {
        let grid = build_grid(&GridSpec::new(0.0, 3.0, 2)).unwrap();
        let ops = build_operator_set(&grid, 0.0, 0.0);
        let x = Array2::from_shape_fn((4, 4), |(j, _)| (j * j) as f64);
        let out = apply_x(&ops.a, &x).unwrap();
        for m in 0..4 {
            assert_eq!(out[[1, m]], 2.0);
            assert_eq!(out[[2, m]], 2.0);
        }
    }

    #[test]
    fn second_difference_exact_for_quadratics() {
        let grid = build_grid(&GridSpec::new(-2.0, 3.0, 9)).unwrap();
        let ops = build_operator_set(&grid, 0.0, 0.0);
        let h2 = grid.h * grid.h;
        let fx = sample(|x, _| x * x, &grid).unwrap();
        let fy = sample(|_, y| y * y, &grid).unwrap();
        let dx = apply_x(&ops.a, &fx.values).unwrap() / h2;
        let dy = apply_y(&fy.values, &ops.a_t).unwrap() / h2;
        let n = grid.size();
        for j in 1..n - 1 {
            for m in 0..n {
                assert!((dx[[j, m]] - 2.0).abs() < 1e-10);
                assert!((dy[[m, j]] - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let x = Array2::zeros((3, 4));
        assert!(apply_x(&TriDiag::identity(4), &x).is_err());
        assert!(apply_y(&x, &TriDiag::identity(3)).is_err());
    }

    #[test]
    fn step_operator_examples() {
        let spec = GridSpec::new(0.0, 3.0, 2).with_step_rule(StepRule::Independent(1.0));
        let grid = build_grid(&spec).unwrap();
        let ops = build_operator_set(&grid, 0.3, 0.2);
        assert_eq!(grid.sigma, 1.0);

        let zero_alpha = assemble_step_operators(&ops, &grid, 1, 0.0, 2.0).unwrap();
        assert_eq!(zero_alpha.w_alpha, TriDiag::identity(4).scale_shift(0.5, 0.0));

        let no_damping = assemble_step_operators(&ops, &grid, 1, 0.25, 0.0).unwrap();
        assert_eq!(no_damping.r_pos, ops.theta.scale_shift(-0.25, 0.0));
        assert!(no_damping.r_pos.diag.iter().all(|&v| v == 0.0));

        let quarter = assemble_step_operators(&ops, &grid, 1, 0.25, 1.0).unwrap();
        assert_eq!(quarter.w_alpha.diag[1], 1.0);
        assert_eq!(quarter.w_alpha.diag[2], 1.0);
        assert_eq!(quarter.a_n, 1.0);
        // l a_n / 2 on the diagonal of R and S.
        assert!(quarter.r_pos.diag.iter().all(|&v| v == 0.5));
        assert!(quarter.s_neg.diag.iter().all(|&v| v == 0.5));
        // W_{α−1/2} = I/2 + σ A / 4 at α = 1/4.
        assert_eq!(quarter.w_alpha_minus_half.diag[1], 0.0);
        assert_eq!(quarter.w_alpha_minus_half.sup[1], 0.25);
    }

    #[test]
    fn limit_policy_uses_second_difference() {
        let grid = build_grid(&GridSpec::new(-10.0, 10.0, 49)).unwrap();
        let ops = build_operator_set_with(&grid, 0.25, 0.25, SingularPolicy::Limit);
        let x2 = sample(|x, y| x * x + 3.0 * y * y, &grid).unwrap().values;
        let gx = apply_x(&ops.theta, &x2).unwrap() / grid.h;
        let gy = apply_y(&x2, &ops.lambda).unwrap() / grid.h;
        // 2λ ∂_x²(x²) = 1 and 2γ ∂_y²(3y²) = 3 on the singular lines.
        assert_relative_eq!(gx[[25, 10]], 1.0, epsilon = 1e-12);
        assert_relative_eq!(gy[[10, 25]], 3.0, epsilon = 1e-12);
        // Off the singular lines (2λ/x)·2x = 1 as well.
        assert_relative_eq!(gx[[20, 10]], 1.0, epsilon = 1e-12);
        assert_eq!(ops.lambda_j[25], 0.0);
    }

    #[test]
    fn singular_time_is_rejected() {
        let grid = build_grid(&GridSpec::new(0.0, 3.0, 2)).unwrap();
        let ops = build_operator_set(&grid, 0.0, 0.0);
        assert!(matches!(
            assemble_step_operators(&ops, &grid, 0, 0.25, 1.0),
            Err(OperatorError::SingularTime { n: 0, .. })
        ));
        assert!(assemble_step_operators(&ops, &grid, 1, 0.25, 1.0).is_ok());
    }
}
