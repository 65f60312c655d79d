//! Small dense kernels: Householder Hessenberg reduction, Francis double-shift
//! real Schur factorization and a banded LU with partial pivoting.

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchurError {
    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("zero pivot at elimination step {index} (|pivot| = {pivot:e})")]
    Singular { index: usize, pivot: f64 },
}

/// Tolerances for the QR iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurOptions {
    /// Relative deflation threshold for subdiagonal entries.
    pub tol: f64,
    /// Iteration cap per matrix row.
    pub max_iter_per_row: usize,
}

impl Default for SchurOptions {
    fn default() -> Self {
        Self {
            tol: f64::EPSILON,
            max_iter_per_row: 100,
        }
    }
}

/// `A = Z T Zᵀ` with `T` upper quasi-triangular and `Z` orthogonal.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub t: Array2<f64>,
    pub z: Array2<f64>,
}

/// Lower and upper bandwidths of a square matrix (structural, exact zeros).
pub fn bandwidths(a: &Array2<f64>) -> (usize, usize) {
    let mut lower = 0;
    let mut upper = 0;
    for ((i, j), &v) in a.indexed_iter() {
        if v != 0.0 {
            if i > j {
                lower = lower.max(i - j);
            } else {
                upper = upper.max(j - i);
            }
        }
    }
    (lower, upper)
}

pub fn is_upper_hessenberg(a: &Array2<f64>) -> bool {
    bandwidths(a).0 <= 1
}

/// Householder reduction `A = Q H Qᵀ` with `H` upper Hessenberg.
pub fn hessenberg(a: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = Array2::eye(n);
    if n < 3 {
        return (h, q);
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let tail: f64 = (k + 2..n).map(|i| h[[i, k]] * h[[i, k]]).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[[k + 1, k]];
        let alpha = (x0 * x0 + tail).sqrt();
        let alpha = if x0 >= 0.0 { -alpha } else { alpha };
        for i in k + 1..n {
            v[i] = h[[i, k]];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        let beta = 2.0 / vnorm2;
        // H ← P H, rows k+1..n
        for j in k..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * h[[i, j]]).sum::<f64>() * beta;
            for i in k + 1..n {
                h[[i, j]] -= s * v[i];
            }
        }
        // H ← H P, columns k+1..n
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| h[[i, j]] * v[j]).sum::<f64>() * beta;
            for j in k + 1..n {
                h[[i, j]] -= s * v[j];
            }
        }
        // Q ← Q P
        for i in 0..n {
            let s: f64 = (k + 1..n).map(|j| q[[i, j]] * v[j]).sum::<f64>() * beta;
            for j in k + 1..n {
                q[[i, j]] -= s * v[j];
            }
        }
        h[[k + 1, k]] = alpha;
        for i in k + 2..n {
            h[[i, k]] = 0.0;
        }
    }
    (h, q)
}

/// Real Schur factorization. Input is first reduced to Hessenberg form
/// (skipped when it already is one, e.g. tridiagonal operators).
pub fn real_schur(a: &Array2<f64>, opts: SchurOptions) -> Result<RealSchur, SchurError> {
    let (r, c) = a.dim();
    if r != c {
        return Err(SchurError::NotSquare((r, c)));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SchurError::NonFinite);
    }
    let (mut t, mut z) = if is_upper_hessenberg(a) {
        (a.clone(), Array2::eye(r))
    } else {
        hessenberg(a)
    };
    francis_qr(&mut t, &mut z, opts)?;
    Ok(RealSchur { t, z })
}

/// Double-shift QR on an upper Hessenberg matrix, accumulating into `z`.
/// Real eigenvalue pairs are rotated to triangular form; complex pairs stay
/// as 2×2 blocks.
fn francis_qr(h: &mut Array2<f64>, v: &mut Array2<f64>, opts: SchurOptions) -> Result<(), SchurError> {
    let nn = h.nrows();
    if nn == 0 {
        return Ok(());
    }
    let eps = opts.tol;
    let max_iter = opts.max_iter_per_row * nn;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[[i, j]].abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);

    while n >= 0 {
        let nu = n as usize;
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > 0 {
            let lu = l as usize;
            s = h[[lu - 1, lu - 1]].abs() + h[[lu, lu]].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[[lu, lu - 1]].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root.
            h[[nu, nu]] += exshift;
            if nu > 0 {
                h[[nu, nu - 1]] = 0.0;
            }
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots.
            if nu >= 2 {
                h[[nu - 1, nu - 2]] = 0.0;
            }
            w = h[[nu, nu - 1]] * h[[nu - 1, nu]];
            p = (h[[nu - 1, nu - 1]] - h[[nu, nu]]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[[nu, nu]] += exshift;
            h[[nu - 1, nu - 1]] += exshift;
            if q >= 0.0 {
                // Real pair: rotate to upper triangular.
                z = if p >= 0.0 { p + z } else { p - z };
                x = h[[nu, nu - 1]];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in nu - 1..nn {
                    z = h[[nu - 1, j]];
                    h[[nu - 1, j]] = q * z + p * h[[nu, j]];
                    h[[nu, j]] = q * h[[nu, j]] - p * z;
                }
                for i in 0..=nu {
                    z = h[[i, nu - 1]];
                    h[[i, nu - 1]] = q * z + p * h[[i, nu]];
                    h[[i, nu]] = q * h[[i, nu]] - p * z;
                }
                for i in 0..nn {
                    z = v[[i, nu - 1]];
                    v[[i, nu - 1]] = q * z + p * v[[i, nu]];
                    v[[i, nu]] = q * v[[i, nu]] - p * z;
                }
                h[[nu, nu - 1]] = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet.
            total_iter += 1;
            if total_iter > max_iter {
                return Err(SchurError::NoConvergence { iterations: max_iter });
            }
            let lu = l as usize;
            x = h[[nu, nu]];
            y = h[[nu - 1, nu - 1]];
            w = h[[nu, nu - 1]] * h[[nu - 1, nu]];

            // Exceptional shifts.
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[[i, i]] -= x;
                }
                s = h[[nu, nu - 1]].abs() + h[[nu - 1, nu - 2]].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[[i, i]] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[[m, m]];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[[m + 1, m]] + h[[m, m + 1]];
                q = h[[m + 1, m + 1]] - z - r - s;
                r = h[[m + 2, m + 1]];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                if h[[m, m - 1]].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[[m - 1, m - 1]].abs() + z.abs() + h[[m + 1, m + 1]].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[[i, i - 2]] = 0.0;
                if i > m + 2 {
                    h[[i, i - 3]] = 0.0;
                }
            }

            // Double QR step on rows l..=n, columns m..=n.
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[[k, k - 1]];
                    q = h[[k + 1, k - 1]];
                    r = if notlast { h[[k + 2, k - 1]] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                } else {
                    x = 0.0;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[[k, k - 1]] = -s * x;
                    } else if lu != m {
                        h[[k, k - 1]] = -h[[k, k - 1]];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[[k, j]] + q * h[[k + 1, j]];
                        if notlast {
                            p += r * h[[k + 2, j]];
                            h[[k + 2, j]] -= p * z;
                        }
                        h[[k, j]] -= p * x;
                        h[[k + 1, j]] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[[i, k]] + y * h[[i, k + 1]];
                        if notlast {
                            p += z * h[[i, k + 2]];
                            h[[i, k + 2]] -= p * r;
                        }
                        h[[i, k]] -= p;
                        h[[i, k + 1]] -= p * q;
                    }
                    for i in 0..nn {
                        p = x * v[[i, k]] + y * v[[i, k + 1]];
                        if notlast {
                            p += z * v[[i, k + 2]];
                            v[[i, k + 2]] -= p * r;
                        }
                        v[[i, k]] -= p;
                        v[[i, k + 1]] -= p * q;
                    }
                }
            }
        }
    }
    // Bulge-chasing leaves rounding-level fill below the subdiagonal.
    for j in 0..nn {
        for i in j + 2..nn {
            h[[i, j]] = 0.0;
        }
    }
    Ok(())
}

/// Diagonal blocks of a quasi-triangular matrix: `(start, size)` with size 1 or 2.
pub fn schur_blocks(t: &Array2<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[[k + 1, k]] != 0.0 {
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}

/// Eigenvalues `(re, im)` read off the diagonal blocks.
pub fn schur_eigenvalues(t: &Array2<f64>) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(t.nrows());
    for (k, size) in schur_blocks(t) {
        if size == 1 {
            out.push((t[[k, k]], 0.0));
        } else {
            let (a, b, c, d) = (t[[k, k]], t[[k, k + 1]], t[[k + 1, k]], t[[k + 1, k + 1]]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let r = disc.sqrt();
                out.push((half_tr + r, 0.0));
                out.push((half_tr - r, 0.0));
            } else {
                let r = (-disc).sqrt();
                out.push((half_tr, r));
                out.push((half_tr, -r));
            }
        }
    }
    out
}

pub fn eigenvalues(a: &Array2<f64>, opts: SchurOptions) -> Result<Vec<(f64, f64)>, SchurError> {
    Ok(schur_eigenvalues(&real_schur(a, opts)?.t))
}

/// Banded matrix with room for the fill produced by partial pivoting.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let kl = kl.min(n.saturating_sub(1));
        let ku = ku.min(n.saturating_sub(1));
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// True if `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl >= i && j <= i + self.kl + self.ku {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Gaussian elimination with partial pivoting; overwrites `rhs` with the
    /// solution. Pivots with magnitude `<= pivot_tol` are reported as singular.
    pub fn solve_in_place(mut self, rhs: &mut [f64], pivot_tol: f64) -> Result<(), BandError> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let (kl, ku) = (self.kl, self.ku);
        let w = self.width;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > pivot_tol) {
                return Err(BandError::Singular { index: k, pivot: best });
            }
            if piv != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(piv, j);
                    self.data.swap(a, b);
                }
                rhs.swap(k, piv);
            }
            let kk = self.idx(k, k);
            let pivot = self.data[kk];
            let cols = last_col - k;
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let f = self.data[ik] / pivot;
                if f == 0.0 {
                    continue;
                }
                self.data[ik] = 0.0;
                // Row k columns k+1..=last_col, contiguous in both rows.
                let (src, dst) = (kk + 1, ik + 1);
                if src < dst {
                    let (head, tail) = self.data.split_at_mut(dst);
                    for (d, s) in tail[..cols].iter_mut().zip(&head[src..src + cols]) {
                        *d -= f * s;
                    }
                } else {
                    let (head, tail) = self.data.split_at_mut(src);
                    for (d, s) in head[dst..dst + cols].iter_mut().zip(&tail[..cols]) {
                        *d -= f * s;
                    }
                }
                rhs[i] -= f * rhs[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + kl + ku).min(n - 1);
            let base = k * w + kl - k;
            let mut s = rhs[k];
            for j in k + 1..=last_col {
                s -= self.data[base + j] * rhs[j];
            }
            rhs[k] = s / self.data[base + k];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((n, n), |_| rng.gen_range(-1.0..1.0))
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn hessenberg_is_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 5, 9] {
            let a = random_matrix(n, &mut rng);
            let (h, q) = hessenberg(&a);
            assert!(is_upper_hessenberg(&h));
            assert!(max_abs(&(q.t().dot(&q) - Array2::<f64>::eye(n))) < 1e-13);
            assert!(max_abs(&(q.dot(&h).dot(&q.t()) - &a)) < 1e-13);
        }
    }

    #[test]
    fn schur_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 4, 6, 8, 15, 30] {
            for _ in 0..5 {
                let a = random_matrix(n, &mut rng);
                let RealSchur { t, z } = real_schur(&a, SchurOptions::default()).unwrap();
                assert!(max_abs(&(z.t().dot(&z) - Array2::<f64>::eye(n))) < 1e-12);
                assert!(max_abs(&(z.dot(&t).dot(&z.t()) - &a)) < 1e-12, "n = {n}");
                // Quasi-triangular: no two consecutive nonzero subdiagonals, nothing below.
                for i in 0..n {
                    for j in 0..i.saturating_sub(1) {
                        assert_eq!(t[[i, j]], 0.0);
                    }
                }
                for i in 1..n.saturating_sub(1) {
                    assert!(t[[i, i - 1]] == 0.0 || t[[i + 1, i]] == 0.0);
                }
                // 2×2 blocks hold complex pairs.
                for (k, size) in schur_blocks(&t) {
                    if size == 2 {
                        let disc = 0.25 * (t[[k, k]] - t[[k + 1, k + 1]]).powi(2) + t[[k, k + 1]] * t[[k + 1, k]];
                        assert!(disc < 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let rot = array![[0.0, -2.0], [2.0, 0.0]];
        let mut ev = eigenvalues(&rot, SchurOptions::default()).unwrap();
        ev.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        assert_relative_eq!(ev[0].1, -2.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1].1, 2.0, epsilon = 1e-14);

        // Neumann second difference: eigenvalues -2 + 2 cos(k π / (n - 1)).
        let n = 7;
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            a[[i, i]] = -2.0;
            if i + 1 < n {
                a[[i, i + 1]] = 1.0;
                a[[i + 1, i]] = 1.0;
            }
        }
        a[[0, 1]] = 2.0;
        a[[n - 1, n - 2]] = 2.0;
        let mut ev: Vec<f64> = eigenvalues(&a, SchurOptions::default())
            .unwrap()
            .into_iter()
            .map(|(re, im)| {
                assert!(im.abs() < 1e-12);
                re
            })
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected: Vec<f64> = (0..n)
            .map(|k| -2.0 + 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 - 1.0)).cos())
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, x) in ev.iter().zip(&expected) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
    }

    #[test]
    fn schur_rejects_bad_input() {
        assert!(matches!(
            real_schur(&Array2::zeros((2, 3)), SchurOptions::default()),
            Err(SchurError::NotSquare(_))
        ));
        assert!(matches!(
            real_schur(&array![[f64::NAN]], SchurOptions::default()),
            Err(SchurError::NonFinite)
        ));
    }

    #[test]
    fn band_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, kl, ku) in [(1, 0, 0), (5, 1, 1), (12, 3, 2), (9, 8, 8), (20, 2, 5)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    if band.in_band(i, j) {
                        let v = rng.gen_range(-1.0..1.0) + if i == j { 0.1 } else { 0.0 };
                        band.add(i, j, v);
                        dense[[i, j]] = v;
                    }
                }
            }
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut rhs: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| dense[[i, j]] * x_true[j]).sum())
                .collect();
            band.solve_in_place(&mut rhs, 0.0).unwrap();
            for (a, b) in rhs.iter().zip(&x_true) {
                assert!((a - b).abs() < 1e-9, "n={n} kl={kl} ku={ku}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn band_solve_pivots() {
        // Zero leading entry forces a row swap.
        let mut band = BandMatrix::zeros(2, 1, 1);
        band.add(0, 1, 1.0);
        band.add(1, 0, 2.0);
        band.add(1, 1, 1.0);
        let mut rhs = vec![3.0, 5.0];
        band.solve_in_place(&mut rhs, 0.0).unwrap();
        assert_eq!(rhs, vec![1.0, 3.0]);
    }

    #[test]
    fn band_solve_reports_singular() {
        let mut band = BandMatrix::zeros(2, 1, 1);
        band.add(0, 0, 1.0);
        band.add(0, 1, 1.0);
        band.add(1, 0, 1.0);
        band.add(1, 1, 1.0);
        let mut rhs = vec![1.0, 1.0];
        assert_eq!(
            band.solve_in_place(&mut rhs, 1e-14),
            Err(BandError::Singular { index: 1, pivot: 0.0 })
        );
    }
}
