//! Stationary solutions `u = v = f(x) + g(y)` and `u = v = f(x) g(y)`.
//!
//! Additive: `f'' + (2λ/x) f' = K`, `g'' + (2γ/y) g' = −K`.
//! Multiplicative: `f'' + (2λ/x) f' = K f`, `g'' + (2γ/y) g' = −K g`.

use super::residual::{ode_residual, standard_samples, RhsMode};
use super::{ExactError, Univariate};

const HALF_TOL: f64 = 1e-12;

/// One-variable building blocks with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `c/(1−2λ) |x|^{1−2λ} sign(x) + k x² / (2(1+2λ))`, `λ ≠ ±1/2`.
    Power { lambda: f64, c: f64, k: f64 },
    /// `c ln|x| + k x²/4`, the `λ = 1/2` case.
    LogHalf { c: f64, k: f64 },
    /// `(x²/2)(k ln|x| + c − 1/2)`, the `λ = −1/2` case.
    LogNegHalf { c: f64, k: f64 },
    /// `|x|^{−λ} (c0 cos(ωx) + (c1/ω) sin(ωx))`, `ω = √k`.
    Sinusoidal { lambda: f64, k: f64, c0: f64, c1: f64 },
}

impl Univariate for Profile {
    fn value(&self, x: f64) -> f64 {
        match *self {
            Profile::Power { lambda, c, k } => {
                let e = 1.0 - 2.0 * lambda;
                c / e * x.abs().powf(e) * x.signum() + k * x * x / (2.0 * (1.0 + 2.0 * lambda))
            }
            Profile::LogHalf { c, k } => c * x.abs().ln() + 0.25 * k * x * x,
            Profile::LogNegHalf { c, k } => 0.5 * x * x * (k * x.abs().ln() + c - 0.5),
            Profile::Sinusoidal { lambda, k, c0, c1 } => {
                let (w, _, _) = wave(k, c0, c1, x);
                x.abs().powf(-lambda) * w
            }
        }
    }

    fn d1(&self, x: f64) -> f64 {
        match *self {
            Profile::Power { lambda, c, k } => c * x.abs().powf(-2.0 * lambda) + k * x / (1.0 + 2.0 * lambda),
            Profile::LogHalf { c, k } => c / x + 0.5 * k * x,
            Profile::LogNegHalf { c, k } => x * (k * x.abs().ln() + c - 0.5 + 0.5 * k),
            Profile::Sinusoidal { lambda, k, c0, c1 } => {
                let (w, dw, _) = wave(k, c0, c1, x);
                x.abs().powf(-lambda) * (dw - lambda * w / x)
            }
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match *self {
            Profile::Power { lambda, c, k } => {
                -2.0 * lambda * c * x.abs().powf(-2.0 * lambda) / x + k / (1.0 + 2.0 * lambda)
            }
            Profile::LogHalf { c, k } => -c / (x * x) + 0.5 * k,
            Profile::LogNegHalf { c, k } => k * x.abs().ln() + c - 0.5 + 1.5 * k,
            Profile::Sinusoidal { lambda, k, c0, c1 } => {
                let (w, dw, ddw) = wave(k, c0, c1, x);
                x.abs().powf(-lambda) * (ddw - 2.0 * lambda * dw / x + lambda * (lambda + 1.0) * w / (x * x))
            }
        }
    }
}

/// `c0 cos(ωx) + (c1/ω) sin(ωx)` and its first two derivatives.
fn wave(k: f64, c0: f64, c1: f64, x: f64) -> (f64, f64, f64) {
    let om = k.sqrt();
    let (s, c) = (om * x).sin_cos();
    let w = c0 * c + c1 / om * s;
    let dw = -c0 * om * s + c1 * c;
    (w, dw, -k * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    AdditiveGeneric,
    AdditiveLogHalf,
    AdditiveLogNegHalf,
    MultiplicativeSinusoidal,
}

/// Max ODE residual over [`standard_samples`] for both components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Against the equations as stated (`+K` for `f`, `−K` for `g`).
    pub stated: f64,
    /// Against the equations with the sign of `K` reversed; recorded for the
    /// multiplicative candidate only.
    pub flipped: Option<f64>,
}

impl Certificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.stated <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub family: Family,
    pub lambda: f64,
    pub gamma: f64,
    pub k: f64,
    pub f: Profile,
    pub g: Profile,
    pub certificate: Certificate,
}

impl ClosedForm {
    pub fn f(&self, x: f64) -> f64 {
        self.f.value(x)
    }

    pub fn g(&self, y: f64) -> f64 {
        self.g.value(y)
    }

    /// `φ(x, y)`, valid for `x, y ≠ 0`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self.family {
            Family::MultiplicativeSinusoidal => self.f(x) * self.g(y),
            _ => self.f(x) + self.g(y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Generic,
    Half,
    NegHalf,
}

fn branch(lambda: f64) -> Branch {
    if (lambda - 0.5).abs() <= HALF_TOL {
        Branch::Half
    } else if (lambda + 0.5).abs() <= HALF_TOL {
        Branch::NegHalf
    } else {
        Branch::Generic
    }
}

fn additive_profile(lambda: f64, c: f64, k: f64) -> Profile {
    match branch(lambda) {
        Branch::Generic => Profile::Power { lambda, c, k },
        Branch::Half => Profile::LogHalf { c, k },
        Branch::NegHalf => Profile::LogNegHalf { c, k },
    }
}

/// Additive stationary pair. `K1`, `K2` weight the non-constant homogeneous
/// solutions of the `f` and `g` equations.
pub fn stationary_additive(lambda: f64, gamma: f64, k: f64, k1: f64, k2: f64) -> Result<ClosedForm, ExactError> {
    for v in [lambda, gamma, k, k1, k2] {
        if !v.is_finite() {
            return Err(ExactError::InvalidBranch("parameters must be finite".into()));
        }
    }
    let family = match (branch(lambda), branch(gamma)) {
        (Branch::Half, Branch::NegHalf) | (Branch::NegHalf, Branch::Half) => {
            return Err(ExactError::InvalidBranch(format!(
                "λ = {lambda}, γ = {gamma} mixes both logarithmic branches"
            )))
        }
        (Branch::Half, _) | (_, Branch::Half) => Family::AdditiveLogHalf,
        (Branch::NegHalf, _) | (_, Branch::NegHalf) => Family::AdditiveLogNegHalf,
        _ => Family::AdditiveGeneric,
    };
    let f = additive_profile(lambda, k1, k);
    let g = additive_profile(gamma, k2, -k);
    let samples = standard_samples();
    let stated = ode_residual(&f, lambda, k, RhsMode::Const, &samples)?.max(ode_residual(
        &g,
        gamma,
        -k,
        RhsMode::Const,
        &samples,
    )?);
    Ok(ClosedForm {
        family,
        lambda,
        gamma,
        k,
        f,
        g,
        certificate: Certificate { stated, flipped: None },
    })
}

/// Oscillatory candidate `f = |x|^{−λ}(a0 cos(√K x) + (a1/√K) sin(√K x))`,
/// `g` likewise with `γ, b0, b1`. This form is not a solution in general;
/// inspect [`ClosedForm::certificate`] before relying on it.
#[allow(clippy::too_many_arguments)]
pub fn stationary_multiplicative(
    lambda: f64,
    gamma: f64,
    k: f64,
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
) -> Result<ClosedForm, ExactError> {
    if !(k > 0.0) {
        return Err(ExactError::NonPositiveK { k });
    }
    let f = Profile::Sinusoidal {
        lambda,
        k,
        c0: a0,
        c1: a1,
    };
    let g = Profile::Sinusoidal {
        lambda: gamma,
        k,
        c0: b0,
        c1: b1,
    };
    let samples = standard_samples();
    let stated = ode_residual(&f, lambda, k, RhsMode::Eigen, &samples)?.max(ode_residual(
        &g,
        gamma,
        -k,
        RhsMode::Eigen,
        &samples,
    )?);
    let flipped = ode_residual(&f, lambda, -k, RhsMode::Eigen, &samples)?.max(ode_residual(
        &g,
        gamma,
        k,
        RhsMode::Eigen,
        &samples,
    )?);
    Ok(ClosedForm {
        family: Family::MultiplicativeSinusoidal,
        lambda,
        gamma,
        k,
        f,
        g,
        certificate: Certificate {
            stated,
            flipped: Some(flipped),
        },
    })
}
