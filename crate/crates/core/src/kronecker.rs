//! Kronecker-vectorized baseline for the coupled system.
//!
//! With column-major `vec`, `vec(L X) = (I ⊗ L) vec X` and
//! `vec(X M) = (Mᵀ ⊗ I) vec X`. Both unknowns are stacked into one vector of
//! length `2n²`, interleaved entry by entry (`z[2(j·n + i) + c]`, `c = 0` for X
//! and `c = 1` for Y), which keeps the system banded when the coefficients are.
//! The system is solved by Gaussian elimination with partial pivoting.

use ndarray::Array2;
use thiserror::Error;

use crate::linalg::{bandwidths, BandError, BandMatrix};
use crate::sylvester::{CoupledError, CoupledProblem};

/// Default cap on the matrix size `n = J + 2` (`J ≤ 199`).
pub const DEFAULT_MAX_SIZE: usize = 201;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KroneckerError {
    #[error("problem size {size} exceeds the Kronecker size guard {max}")]
    TooLarge { size: usize, max: usize },
    #[error("singular vectorized system: {0}")]
    Singular(#[from] BandError),
    #[error(transparent)]
    Problem(#[from] CoupledError),
}

/// Dense Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Block form `[[I⊗W + W'ᵀ⊗I, I⊗R + Sᵀ⊗I], [I⊗R + Sᵀ⊗I, I⊗W + W'ᵀ⊗I]]`
/// acting on `[vec X; vec Y]`. Intended for small problems and tests.
pub fn kronecker_operator(p: &CoupledProblem) -> Array2<f64> {
    let n = p.size();
    let id = Array2::<f64>::eye(n);
    let diag = kron(&id, &p.w_left) + kron(&p.w_right.t().to_owned(), &id);
    let off = kron(&id, &p.r) + kron(&p.s.t().to_owned(), &id);
    let nn = n * n;
    let mut k = Array2::zeros((2 * nn, 2 * nn));
    k.slice_mut(ndarray::s![..nn, ..nn]).assign(&diag);
    k.slice_mut(ndarray::s![nn.., nn..]).assign(&diag);
    k.slice_mut(ndarray::s![..nn, nn..]).assign(&off);
    k.slice_mut(ndarray::s![nn.., ..nn]).assign(&off);
    k
}

#[inline]
fn index(n: usize, i: usize, j: usize, c: usize) -> usize {
    2 * (j * n + i) + c
}

/// Assembles the interleaved vectorized operator in banded storage.
pub fn assemble_banded(p: &CoupledProblem) -> BandMatrix {
    let n = p.size();
    let big = 2 * n * n;
    let (wl_lo, wl_up) = bandwidths(&p.w_left);
    let (r_lo, r_up) = bandwidths(&p.r);
    let (wr_lo, wr_up) = bandwidths(&p.w_right);
    let (s_lo, s_up) = bandwidths(&p.s);
    let left_lo = wl_lo.max(r_lo);
    let left_up = wl_up.max(r_up);
    let right_lo = wr_lo.max(s_lo);
    let right_up = wr_up.max(s_up);
    // Left factors couple rows i ↔ i' (stride 2); right factors couple
    // columns j ↔ j' through M[j', j] (stride 2n); the X/Y pairing adds ±1.
    let kl = (2 * left_lo + 1).max(2 * n * right_up + 1);
    let ku = (2 * left_up + 1).max(2 * n * right_lo + 1);
    let mut band = BandMatrix::zeros(big, kl, ku);
    for j in 0..n {
        for i in 0..n {
            for c in 0..2 {
                let row = index(n, i, j, c);
                for i2 in i.saturating_sub(left_lo)..=(i + left_up).min(n - 1) {
                    let w = p.w_left[[i, i2]];
                    if w != 0.0 {
                        band.add(row, index(n, i2, j, c), w);
                    }
                    let r = p.r[[i, i2]];
                    if r != 0.0 {
                        band.add(row, index(n, i2, j, 1 - c), r);
                    }
                }
                for j2 in j.saturating_sub(right_up)..=(j + right_lo).min(n - 1) {
                    let w = p.w_right[[j2, j]];
                    if w != 0.0 {
                        band.add(row, index(n, i, j2, c), w);
                    }
                    let s = p.s[[j2, j]];
                    if s != 0.0 {
                        band.add(row, index(n, i, j2, 1 - c), s);
                    }
                }
            }
        }
    }
    band
}

/// Options for [`kronecker_solve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KroneckerOptions {
    pub max_size: usize,
}

impl Default for KroneckerOptions {
    fn default() -> Self {
        Self {
            max_size: DEFAULT_MAX_SIZE,
        }
    }
}

pub fn kronecker_solve(p: &CoupledProblem) -> Result<(Array2<f64>, Array2<f64>), KroneckerError> {
    kronecker_solve_with(p, KroneckerOptions::default())
}

pub fn kronecker_solve_with(
    p: &CoupledProblem,
    opts: KroneckerOptions,
) -> Result<(Array2<f64>, Array2<f64>), KroneckerError> {
    p.validate()?;
    let n = p.size();
    if n > opts.max_size {
        return Err(KroneckerError::TooLarge {
            size: n,
            max: opts.max_size,
        });
    }
    if n == 0 {
        return Ok((Array2::zeros((0, 0)), Array2::zeros((0, 0))));
    }
    let band = assemble_banded(p);
    let tol = 1e-13 * band.max_abs();
    let mut rhs = vec![0.0; 2 * n * n];
    for j in 0..n {
        for i in 0..n {
            rhs[index(n, i, j, 0)] = p.c1[[i, j]];
            rhs[index(n, i, j, 1)] = p.c2[[i, j]];
        }
    }
    band.solve_in_place(&mut rhs, tol)?;
    let x = Array2::from_shape_fn((n, n), |(i, j)| rhs[index(n, i, j, 0)]);
    let y = Array2::from_shape_fn((n, n), |(i, j)| rhs[index(n, i, j, 1)]);
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn kron_small() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[0.0, 5.0], [6.0, 7.0]];
        let k = kron(&a, &b);
        assert_eq!(
            k,
            array![
                [0.0, 5.0, 0.0, 10.0],
                [6.0, 7.0, 12.0, 14.0],
                [0.0, 15.0, 0.0, 20.0],
                [18.0, 21.0, 24.0, 28.0]
            ]
        );
    }

    #[test]
    fn banded_assembly_is_permuted_kronecker_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 4;
        // Mix dense and tridiagonal coefficients.
        let mut w = random(n, &mut rng);
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > 1 {
                    w[[i, j]] = 0.0;
                }
            }
        }
        let p = CoupledProblem::new(
            w,
            random(n, &mut rng),
            random(n, &mut rng),
            Array2::zeros((n, n)),
            Array2::zeros((n, n)),
        );
        let dense = kronecker_operator(&p);
        let band = assemble_banded(&p);
        let nn = n * n;
        // Block ordering index: c * n² + j * n + i.
        for j in 0..n {
            for i in 0..n {
                for c in 0..2 {
                    for j2 in 0..n {
                        for i2 in 0..n {
                            for c2 in 0..2 {
                                let d = dense[[c * nn + j * n + i, c2 * nn + j2 * n + i2]];
                                let b = band.get(index(n, i, j, c), index(n, i2, j2, c2));
                                assert_eq!(d, b);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_problem() {
        let p = CoupledProblem::new(
            array![[2.0]],
            array![[0.0]],
            array![[0.0]],
            array![[8.0]],
            array![[4.0]],
        );
        let (x, y) = kronecker_solve(&p).unwrap();
        assert_eq!(x, array![[2.0]]);
        assert_eq!(y, array![[1.0]]);
    }

    #[test]
    fn singular_and_guard() {
        let id = Array2::eye(2);
        let p = CoupledProblem::new(
            id.clone(),
            id.clone(),
            id.clone(),
            Array2::ones((2, 2)),
            Array2::zeros((2, 2)),
        );
        assert!(matches!(kronecker_solve(&p), Err(KroneckerError::Singular(_))));
        let ok = CoupledProblem::new(
            id.clone(),
            Array2::zeros((2, 2)),
            Array2::zeros((2, 2)),
            Array2::ones((2, 2)),
            Array2::zeros((2, 2)),
        );
        assert_eq!(
            kronecker_solve_with(&ok, KroneckerOptions { max_size: 1 }),
            Err(KroneckerError::TooLarge { size: 2, max: 1 })
        );
    }
}
