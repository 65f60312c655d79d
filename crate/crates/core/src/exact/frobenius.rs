//! Frobenius series for `x² f'' + 2λ x f' = K x² f` about `x = 0`.
//!
//! With `f = |x|^ν Σ a_n xⁿ` the coefficients obey
//! `(n + ν)(n + ν − 1 + 2λ) a_n = K a_{n−2}` and the indicial roots are
//! `ν ∈ {0, 1 − 2λ}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

use super::{ExactError, Univariate};

/// Scalar field the recurrence can run in.
pub trait FrobeniusScalar: Clone + Num + ToPrimitive {
    fn from_usize(n: usize) -> Self;
    /// Treated as an exact zero when testing denominators.
    fn is_negligible(&self) -> bool;
}

impl FrobeniusScalar for f64 {
    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-10
    }
}

impl FrobeniusScalar for BigRational {
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicial {
    pub roots: (f64, f64),
    /// Roots differ by an integer (including a double root).
    pub resonant: bool,
}

pub fn frobenius_indicial(lambda: f64) -> Indicial {
    let second = 1.0 - 2.0 * lambda;
    Indicial {
        roots: (0.0, second),
        resonant: (second - second.round()).abs() <= 1e-12,
    }
}

/// `(n + ν)(n + ν − 1 + 2λ)`.
fn denominator<T: FrobeniusScalar>(n: usize, lambda: &T, nu: &T) -> T {
    let one = T::one();
    let two = T::from_usize(2);
    let m = T::from_usize(n) + nu.clone();
    m.clone() * (m - one + two * lambda.clone())
}

/// Coefficients `a_0..=a_N` in any [`FrobeniusScalar`]. `a1` is used only
/// when the `n = 1` equation leaves it free.
pub fn frobenius_series<T: FrobeniusScalar>(
    lambda: &T,
    nu: &T,
    k: &T,
    order: usize,
    a0: T,
    a1: T,
) -> Result<Vec<T>, ExactError> {
    if !denominator(0, lambda, nu).is_negligible() {
        return Err(ExactError::NotIndicialRoot {
            lambda: lambda.to_f64().unwrap_or(f64::NAN),
            nu: nu.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(a0);
    if order >= 1 {
        let free = denominator(1, lambda, nu).is_negligible();
        coeffs.push(if free { a1 } else { T::zero() });
    }
    for n in 2..=order {
        let d = denominator(n, lambda, nu);
        if d.is_negligible() {
            return Err(ExactError::Resonance { index: n });
        }
        let next = k.clone() * coeffs[n - 2].clone() / d;
        coeffs.push(next);
    }
    Ok(coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// Truncated series `|x|^ν Σ_{n≤N} a_n xⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub lambda: f64,
    pub nu: f64,
    pub k: f64,
    pub coeffs: Vec<f64>,
    pub parity: Parity,
}

impl SeriesSolution {
    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `(P, P', P'')` for the polynomial part.
    fn poly(&self, x: f64) -> (f64, f64, f64) {
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &a in self.coeffs.iter().rev() {
            ddp = ddp * x + 2.0 * dp;
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp, ddp)
    }
}

pub fn frobenius_coefficients(
    lambda: f64,
    nu: f64,
    k: f64,
    order: usize,
    a0: f64,
    a1: f64,
) -> Result<SeriesSolution, ExactError> {
    let coeffs = frobenius_series(&lambda, &nu, &k, order, a0, a1)?;
    let odd_zero = coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
    let even_zero = coeffs.iter().step_by(2).all(|&c| c == 0.0);
    let parity = match (odd_zero, even_zero) {
        (true, _) => Parity::Even,
        (false, true) => Parity::Odd,
        (false, false) => Parity::Mixed,
    };
    Ok(SeriesSolution {
        lambda,
        nu,
        k,
        coeffs,
        parity,
    })
}

/// Value and a geometric tail estimate built from the ratio
/// `|K| x² / |(N + ν)(N + ν − 1 + 2λ)|`; infinite when that ratio is ≥ 1.
pub fn evaluate_series(s: &SeriesSolution, x: f64) -> Result<(f64, f64), ExactError> {
    let order = s.order();
    if order < 2 {
        return Err(ExactError::TruncationTooShort { order });
    }
    if x == 0.0 {
        return if s.nu < 0.0 {
            Err(ExactError::SingularPoint { x })
        } else if s.nu == 0.0 {
            Ok((s.coeffs[0], 0.0))
        } else {
            Ok((0.0, 0.0))
        };
    }
    let scale = x.abs().powf(s.nu);
    let value = scale * s.poly(x).0;
    let d = denominator(order, &s.lambda, &s.nu).abs();
    let ratio = s.k.abs() * x * x / d;
    let last =
        s.coeffs[order - 1].abs() * x.abs().powi(order as i32 - 1) + s.coeffs[order].abs() * x.abs().powi(order as i32);
    let tail = if last == 0.0 {
        0.0
    } else if ratio < 1.0 {
        scale * last * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    Ok((value, tail))
}

impl Univariate for SeriesSolution {
    fn value(&self, x: f64) -> f64 {
        if self.nu == 0.0 {
            return self.poly(x).0;
        }
        x.abs().powf(self.nu) * self.poly(x).0
    }

    fn d1(&self, x: f64) -> f64 {
        let (p, dp, _) = self.poly(x);
        if self.nu == 0.0 {
            return dp;
        }
        x.abs().powf(self.nu) * (self.nu * p / x + dp)
    }

    fn d2(&self, x: f64) -> f64 {
        let (p, dp, ddp) = self.poly(x);
        if self.nu == 0.0 {
            return ddp;
        }
        let nu = self.nu;
        x.abs().powf(nu) * (nu * (nu - 1.0) * p / (x * x) + 2.0 * nu * dp / x + ddp)
    }
}
