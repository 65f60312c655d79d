//! Sylvester and coupled Lyapunov-Sylvester solvers.
//!
//! The standard equation `L X + X M = C` is solved in Hessenberg-Schur form:
//! `L` is reduced to upper Hessenberg form (a no-op for the tridiagonal
//! operators of the scheme) and `M` to real Schur form, after which the
//! columns of the transformed unknown are recovered one diagonal block at a
//! time from banded shifted Hessenberg systems.
//!
//! The coupled system
//!
//! ```text
//! W X + X W' + R Y + Y S = C1
//! W Y + Y W' + R X + X S = C2
//! ```
//!
//! decouples under `P = X + Y`, `Q = X − Y` into two standard equations.

use ndarray::{s, Array2};
use thiserror::Error;

use crate::grid::l2_norm;
use crate::linalg::{
    bandwidths, eigenvalues, hessenberg, is_upper_hessenberg, real_schur, schur_blocks, BandError, BandMatrix,
    SchurError, SchurOptions,
};

/// Relative threshold for a Sylvester pivot before the system is declared
/// non-solvable.
pub const NEAR_SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SylvesterError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error(
        "non-solvable Sylvester equation: right coefficient eigenvalue {re:+.6e}{im:+.6e}i \
         is (nearly) the negative of an eigenvalue of the left coefficient \
         (pivot {pivot:.3e} in column block {column})"
    )]
    NonSolvable {
        column: usize,
        re: f64,
        im: f64,
        pivot: f64,
    },
    #[error("Schur factorization failed: {0}")]
    Schur(#[from] SchurError),
}

/// Which decoupled branch of a coupled solve failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `(W + R) P + P (W' + S) = C1 + C2`.
    Sum,
    /// `(W − R) Q + Q (W' − S) = C1 − C2`.
    Difference,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Sum => write!(f, "sum"),
            Branch::Difference => write!(f, "difference"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoupledError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{branch} branch: {source}")]
    Branch {
        branch: Branch,
        #[source]
        source: SylvesterError,
    },
}

/// `L X + X R = C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SylvesterProblem {
    pub left: Array2<f64>,
    pub right: Array2<f64>,
    pub rhs: Array2<f64>,
}

impl SylvesterProblem {
    pub fn new(left: Array2<f64>, right: Array2<f64>, rhs: Array2<f64>) -> Self {
        Self { left, right, rhs }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        self.left.dot(x) + x.dot(&self.right)
    }

    fn validate(&self) -> Result<(), SylvesterError> {
        let (n, n2) = self.left.dim();
        let (m, m2) = self.right.dim();
        if n != n2 || m != m2 {
            return Err(SylvesterError::DimensionMismatch(format!(
                "coefficients must be square, got {:?} and {:?}",
                self.left.dim(),
                self.right.dim()
            )));
        }
        if self.rhs.dim() != (n, m) {
            return Err(SylvesterError::DimensionMismatch(format!(
                "right-hand side is {:?}, expected {:?}",
                self.rhs.dim(),
                (n, m)
            )));
        }
        for (name, a) in [("left", &self.left), ("right", &self.right), ("rhs", &self.rhs)] {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(SylvesterError::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// Solves `L X + X R = C`.
pub fn solve_sylvester(p: &SylvesterProblem) -> Result<Array2<f64>, SylvesterError> {
    p.validate()?;
    let (n, m) = p.rhs.dim();
    if n == 0 || m == 0 {
        return Ok(Array2::zeros((n, m)));
    }
    let scale = l2_norm(&p.left) + l2_norm(&p.right);
    let pivot_tol = NEAR_SINGULAR_TOL * scale.max(f64::MIN_POSITIVE);

    let (h, q) = if is_upper_hessenberg(&p.left) {
        (p.left.clone(), None)
    } else {
        let (h, q) = hessenberg(&p.left);
        (h, Some(q))
    };
    let schur = real_schur(&p.right, SchurOptions::default())?;
    let t = &schur.t;
    let z = &schur.z;

    // F = Qᵀ C Z
    let mut f = match &q {
        Some(q) => q.t().dot(&p.rhs).dot(z),
        None => p.rhs.dot(z),
    };

    let ku = bandwidths(&h).1;
    let mut y = Array2::<f64>::zeros((n, m));
    for (k, size) in schur_blocks(t) {
        // Subtract contributions of already-solved columns.
        for c in k..k + size {
            for i in 0..k {
                let tik = t[[i, c]];
                if tik != 0.0 {
                    let (yi, mut fc) = (y.column(i), f.column_mut(c));
                    fc.scaled_add(-tik, &yi);
                }
            }
        }
        if size == 1 {
            let shift = t[[k, k]];
            let mut band = BandMatrix::zeros(n, 1, ku);
            fill_hessenberg(&mut band, &h, ku, |r, c| (r, c), shift);
            let mut rhs: Vec<f64> = f.column(k).to_vec();
            band.solve_in_place(&mut rhs, pivot_tol)
                .map_err(|e| singular(e, k, shift, 0.0))?;
            y.column_mut(k).assign(&ndarray::ArrayView1::from(&rhs));
        } else {
            // Interleave the two columns: z[2r + c] = Y[r, k + c].
            let blk = t.slice(s![k..k + 2, k..k + 2]).to_owned();
            let mut band = BandMatrix::zeros(2 * n, 3, 2 * ku + 1);
            for c in 0..2 {
                fill_hessenberg(&mut band, &h, ku, |r, cc| (2 * r + c, 2 * cc + c), 0.0);
                for r in 0..n {
                    for c2 in 0..2 {
                        let v = blk[[c2, c]];
                        if v != 0.0 {
                            band.add(2 * r + c, 2 * r + c2, v);
                        }
                    }
                }
            }
            let mut rhs = vec![0.0; 2 * n];
            for r in 0..n {
                rhs[2 * r] = f[[r, k]];
                rhs[2 * r + 1] = f[[r, k + 1]];
            }
            let (re, im) = {
                let half_tr = 0.5 * (blk[[0, 0]] + blk[[1, 1]]);
                let disc = 0.25 * (blk[[0, 0]] - blk[[1, 1]]).powi(2) + blk[[0, 1]] * blk[[1, 0]];
                (half_tr, (-disc).max(0.0).sqrt())
            };
            band.solve_in_place(&mut rhs, pivot_tol)
                .map_err(|e| singular(e, k, re, im))?;
            for r in 0..n {
                y[[r, k]] = rhs[2 * r];
                y[[r, k + 1]] = rhs[2 * r + 1];
            }
        }
    }

    // X = Q Y Zᵀ
    let x = match &q {
        Some(q) => q.dot(&y).dot(&z.t()),
        None => y.dot(&z.t()),
    };
    Ok(x)
}

fn fill_hessenberg<F>(band: &mut BandMatrix, h: &Array2<f64>, ku: usize, map: F, shift: f64)
where
    F: Fn(usize, usize) -> (usize, usize),
{
    let n = h.nrows();
    for r in 0..n {
        let lo = r.saturating_sub(1);
        let hi = (r + ku).min(n - 1);
        for c in lo..=hi {
            let mut v = h[[r, c]];
            if r == c {
                v += shift;
            }
            if v != 0.0 {
                let (i, j) = map(r, c);
                band.add(i, j, v);
            }
        }
    }
}

fn singular(e: BandError, column: usize, re: f64, im: f64) -> SylvesterError {
    let BandError::Singular { pivot, .. } = e;
    SylvesterError::NonSolvable { column, re, im, pivot }
}

/// Coupled Lyapunov-Sylvester system
/// `W X + X W' + R Y + Y S = C1`, `W Y + Y W' + R X + X S = C2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledProblem {
    pub w_left: Array2<f64>,
    pub w_right: Array2<f64>,
    pub r: Array2<f64>,
    pub s: Array2<f64>,
    pub c1: Array2<f64>,
    pub c2: Array2<f64>,
}

impl CoupledProblem {
    /// Same `W` on both sides.
    pub fn new(w: Array2<f64>, r: Array2<f64>, s: Array2<f64>, c1: Array2<f64>, c2: Array2<f64>) -> Self {
        Self {
            w_right: w.clone(),
            w_left: w,
            r,
            s,
            c1,
            c2,
        }
    }

    /// `W` on the left, `Wᵀ` on the right.
    pub fn lyapunov(w: Array2<f64>, r: Array2<f64>, s: Array2<f64>, c1: Array2<f64>, c2: Array2<f64>) -> Self {
        Self {
            w_right: w.t().to_owned(),
            w_left: w,
            r,
            s,
            c1,
            c2,
        }
    }

    pub fn size(&self) -> usize {
        self.w_left.nrows()
    }

    /// `Φ(X, Y)`.
    pub fn apply(&self, x: &Array2<f64>, y: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let lx = self.w_left.dot(x) + x.dot(&self.w_right);
        let ly = self.w_left.dot(y) + y.dot(&self.w_right);
        let cy = self.r.dot(y) + y.dot(&self.s);
        let cx = self.r.dot(x) + x.dot(&self.s);
        (lx + cy, ly + cx)
    }

    pub(crate) fn validate(&self) -> Result<(), CoupledError> {
        let n = self.w_left.nrows();
        for (name, a) in [
            ("W (left)", &self.w_left),
            ("W (right)", &self.w_right),
            ("R", &self.r),
            ("S", &self.s),
            ("C1", &self.c1),
            ("C2", &self.c2),
        ] {
            if a.dim() != (n, n) {
                return Err(CoupledError::DimensionMismatch(format!(
                    "{name} is {:?}, expected {:?}",
                    a.dim(),
                    (n, n)
                )));
            }
        }
        Ok(())
    }

    pub fn sum_branch(&self) -> SylvesterProblem {
        SylvesterProblem::new(&self.w_left + &self.r, &self.w_right + &self.s, &self.c1 + &self.c2)
    }

    pub fn difference_branch(&self) -> SylvesterProblem {
        SylvesterProblem::new(&self.w_left - &self.r, &self.w_right - &self.s, &self.c1 - &self.c2)
    }
}

pub fn solve_coupled(p: &CoupledProblem) -> Result<(Array2<f64>, Array2<f64>), CoupledError> {
    p.validate()?;
    let sum = solve_sylvester(&p.sum_branch()).map_err(|source| CoupledError::Branch {
        branch: Branch::Sum,
        source,
    })?;
    let diff = solve_sylvester(&p.difference_branch()).map_err(|source| CoupledError::Branch {
        branch: Branch::Difference,
        source,
    })?;
    let x = (&sum + &diff) * 0.5;
    let y = (&sum - &diff) * 0.5;
    Ok((x, y))
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Relative residual in the L2 matrix norm. A zero right-hand side falls back
/// to the absolute residual (so `0/0 → 0`).
pub trait Residual {
    type Solution: ?Sized;
    fn residual(&self, solution: &Self::Solution) -> f64;
}

impl Residual for SylvesterProblem {
    type Solution = Array2<f64>;
    fn residual(&self, x: &Array2<f64>) -> f64 {
        relative(l2_norm(&(self.apply(x) - &self.rhs)), l2_norm(&self.rhs))
    }
}

impl Residual for CoupledProblem {
    type Solution = (Array2<f64>, Array2<f64>);
    fn residual(&self, (x, y): &(Array2<f64>, Array2<f64>)) -> f64 {
        let (e1, e2) = self.apply(x, y);
        let num = l2_norm(&(e1 - &self.c1)).hypot(l2_norm(&(e2 - &self.c2)));
        let den = l2_norm(&self.c1).hypot(l2_norm(&self.c2));
        relative(num, den)
    }
}

/// `min |λ_i + μ_j|` over eigenvalues of `left` and `right`.
pub fn sylvester_margin(left: &Array2<f64>, right: &Array2<f64>) -> Result<f64, SchurError> {
    let opts = SchurOptions {
        tol: 1e-10,
        max_iter_per_row: 100,
    };
    let el = eigenvalues(left, opts)?;
    let er = eigenvalues(right, opts)?;
    let mut margin = f64::INFINITY;
    for &(a, b) in &el {
        for &(c, d) in &er {
            margin = margin.min((a + c).hypot(b + d));
        }
    }
    Ok(margin)
}

/// Smallest eigenvalue-pair sum over both decoupled branches; positive means
/// the coupled operator is invertible.
pub fn solvability_margin(
    w_left: &Array2<f64>,
    w_right: &Array2<f64>,
    r: &Array2<f64>,
    s: &Array2<f64>,
) -> Result<f64, SchurError> {
    let sum = sylvester_margin(&(w_left + r), &(w_right + s))?;
    let diff = sylvester_margin(&(w_left - r), &(w_right - s))?;
    Ok(sum.min(diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((n, m), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn half_identity_coefficients_return_rhs() {
        let c = array![[1.0, -2.0, 0.5], [3.0, 4.0, -1.0], [0.0, 7.0, 2.0]];
        let half = Array2::eye(3) * 0.5;
        let x = solve_sylvester(&SylvesterProblem::new(half.clone(), half, c.clone())).unwrap();
        assert_eq!(x, c);
    }

    #[test]
    fn diagonal_coefficients() {
        let p = SylvesterProblem::new(
            array![[1.0, 0.0], [0.0, 2.0]],
            array![[3.0, 0.0], [0.0, 4.0]],
            Array2::ones((2, 2)),
        );
        let x = solve_sylvester(&p).unwrap();
        let expected = array![[0.25, 0.2], [0.2, 1.0 / 6.0]];
        for (a, b) in x.iter().zip(expected.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn spectrum_intersection_is_reported() {
        let p = SylvesterProblem::new(array![[1.0]], array![[-1.0]], array![[3.0]]);
        match solve_sylvester(&p) {
            Err(SylvesterError::NonSolvable { re, im, .. }) => {
                assert_eq!(re, -1.0);
                assert_eq!(im, 0.0);
            }
            other => panic!("expected non-solvable, got {other:?}"),
        }
    }

    #[test]
    fn random_dense_and_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (n, m) in [(1, 1), (3, 3), (5, 2), (2, 7), (8, 8), (12, 9)] {
            let left = random(n, n, &mut rng) + Array2::<f64>::eye(n) * 3.0;
            let right = random(m, m, &mut rng);
            let rhs = random(n, m, &mut rng);
            let p = SylvesterProblem::new(left, right, rhs);
            let x = solve_sylvester(&p).unwrap();
            assert!(p.residual(&x) < 1e-12, "({n},{m}): {}", p.residual(&x));
        }
    }

    #[test]
    fn complex_right_spectrum() {
        // Rotation-like right coefficient forces 2×2 Schur blocks.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let mut right = Array2::zeros((n, n));
        for k in (0..n).step_by(2) {
            right[[k, k]] = 0.3;
            right[[k, k + 1]] = -1.5;
            right[[k + 1, k]] = 1.5;
            right[[k + 1, k + 1]] = 0.3;
        }
        let q = crate::linalg::hessenberg(&random(n, n, &mut rng)).1;
        let right = q.dot(&right).dot(&q.t());
        let left = random(n, n, &mut rng);
        let rhs = random(n, n, &mut rng);
        let p = SylvesterProblem::new(left, right, rhs);
        let x = solve_sylvester(&p).unwrap();
        assert!(p.residual(&x) < 1e-11);
    }

    #[test]
    fn dimension_errors() {
        let p = SylvesterProblem::new(Array2::eye(2), Array2::eye(3), Array2::zeros((3, 2)));
        assert!(matches!(solve_sylvester(&p), Err(SylvesterError::DimensionMismatch(_))));
        let bad = CoupledProblem::new(
            Array2::eye(2),
            Array2::eye(2),
            Array2::eye(3),
            Array2::zeros((2, 2)),
            Array2::zeros((2, 2)),
        );
        assert!(matches!(solve_coupled(&bad), Err(CoupledError::DimensionMismatch(_))));
    }

    #[test]
    fn coupled_entrywise_two_by_two() {
        let m = array![[1.0, -2.0], [0.5, 3.0]];
        let p = CoupledProblem::new(
            Array2::eye(2),
            Array2::eye(2) * 0.5,
            Array2::eye(2) * 0.5,
            m.clone(),
            -&m,
        );
        let (x, y) = solve_coupled(&p).unwrap();
        for ((a, b), c) in x.iter().zip(y.iter()).zip(m.iter()) {
            assert_relative_eq!(*a, *c, max_relative = 1e-15);
            assert_relative_eq!(*b, -*c, max_relative = 1e-15);
        }
    }

    #[test]
    fn coupled_zero_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random(4, 4, &mut rng) + Array2::<f64>::eye(4) * 4.0;
        let p = CoupledProblem::new(
            w,
            random(4, 4, &mut rng),
            random(4, 4, &mut rng),
            Array2::zeros((4, 4)),
            Array2::zeros((4, 4)),
        );
        let (x, y) = solve_coupled(&p).unwrap();
        assert!(x.iter().chain(y.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn coupled_failure_names_branch() {
        let p = CoupledProblem::new(
            Array2::eye(2),
            Array2::eye(2),
            Array2::eye(2),
            Array2::ones((2, 2)),
            Array2::zeros((2, 2)),
        );
        match solve_coupled(&p) {
            Err(CoupledError::Branch { branch, .. }) => assert_eq!(branch, Branch::Difference),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn limiting_operator_is_entrywise_pair() {
        // α → 0: W = I/2, R = S = (a'/2) I gives Φ(X, Y) = (X + a'Y, Y + a'X).
        let a = 0.3;
        let c1 = array![[1.0, 2.0], [3.0, 4.0]];
        let c2 = array![[-1.0, 0.5], [2.0, 0.0]];
        let half = Array2::eye(2) * 0.5;
        let damp = Array2::eye(2) * (a / 2.0);
        let p = CoupledProblem::new(half, damp.clone(), damp, c1.clone(), c2.clone());
        let (x, y) = solve_coupled(&p).unwrap();
        let det = 1.0 - a * a;
        for i in 0..2 {
            for j in 0..2 {
                let ex = (c1[[i, j]] - a * c2[[i, j]]) / det;
                let ey = (c2[[i, j]] - a * c1[[i, j]]) / det;
                assert_relative_eq!(x[[i, j]], ex, max_relative = 1e-14);
                assert_relative_eq!(y[[i, j]], ey, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn residual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 5;
        let p = SylvesterProblem::new(
            random(n, n, &mut rng) + Array2::<f64>::eye(n) * 2.0,
            random(n, n, &mut rng) + Array2::<f64>::eye(n) * 2.0,
            random(n, n, &mut rng),
        );
        let x = solve_sylvester(&p).unwrap();
        assert!(p.residual(&x) <= 1e-14);

        let e = random(n, n, &mut rng);
        let r1 = p.residual(&(&x + &(&e * 1e-6)));
        let r2 = p.residual(&(&x + &(&e * 2e-6)));
        assert_relative_eq!(r2 / r1, 2.0, max_relative = 1e-6);

        let zero = SylvesterProblem::new(Array2::eye(3), Array2::eye(3), Array2::zeros((3, 3)));
        assert_eq!(zero.residual(&Array2::zeros((3, 3))), 0.0);
    }

    #[test]
    fn margin_examples() {
        let half = Array2::eye(3) * 0.5;
        let zero = Array2::zeros((3, 3));
        assert_relative_eq!(
            solvability_margin(&half, &half, &zero, &zero).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let id = Array2::eye(3);
        assert_eq!(solvability_margin(&id, &id, &id, &id).unwrap(), 0.0);
    }
}
