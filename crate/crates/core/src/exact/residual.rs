//! Residual oracles for the one-dimensional ODEs and the full system.

use super::{ExactError, Univariate};
use crate::stepper::ProblemDef;

/// Relative step of the fourth-order central differences.
const FD_STEP: f64 = 1e-3;

fn fd_step(x: f64) -> f64 {
    FD_STEP * x.abs().max(1.0)
}

/// Fourth-order central first and second derivatives of `f` at `x`.
fn central(f: impl Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let h = fd_step(x);
    let (m2, m1, c, p1, p2) = (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// Black-box function differentiated numerically.
pub struct FiniteDiff<F>(pub F);

impl<F: Fn(f64) -> f64> Univariate for FiniteDiff<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    fn d1(&self, x: f64) -> f64 {
        central(&self.0, x).0
    }

    fn d2(&self, x: f64) -> f64 {
        central(&self.0, x).1
    }
}

/// Right-hand side of `f'' + (2λ/x) f' = RHS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    /// `RHS = K`.
    Const,
    /// `RHS = K f`.
    Eigen,
    /// `RHS = 0`.
    Zero,
}

/// 41 points on each of `[−10, −0.1]` and `[0.1, 10]`.
pub fn standard_samples() -> Vec<f64> {
    let mut out = Vec::with_capacity(82);
    for k in 0..=40 {
        let x = 0.1 + 9.9 * k as f64 / 40.0;
        out.push(-x);
        out.push(x);
    }
    out
}

/// `max |f'' + (2λ/x) f' − RHS|` over `samples`.
pub fn ode_residual(
    f: &dyn Univariate,
    lambda: f64,
    k: f64,
    mode: RhsMode,
    samples: &[f64],
) -> Result<f64, ExactError> {
    let mut worst = 0.0_f64;
    for &x in samples {
        if x == 0.0 {
            return Err(ExactError::SingularSample {
                x,
                y: f64::NAN,
                t: f64::NAN,
            });
        }
        let rhs = match mode {
            RhsMode::Const => k,
            RhsMode::Eigen => k * f.value(x),
            RhsMode::Zero => 0.0,
        };
        let r = f.d2(x) + 2.0 * lambda / x * f.d1(x) - rhs;
        if !r.is_finite() {
            return Err(ExactError::NonFinite {
                x,
                y: f64::NAN,
                t: f64::NAN,
            });
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// `max` over samples and both equations of
/// `|u_tt + (2a/t) v_t − Δu − (2λ/x) v_x − (2γ/y) v_y − |u|^{p−1} v − G1|`
/// (and the mirrored second equation). Only the coefficients, nonlinearity
/// switch and forcing of `prob` are used.
pub fn pde_residual<U, V>(u: U, v: V, prob: &ProblemDef, samples: &[(f64, f64, f64)]) -> Result<f64, ExactError>
where
    U: Fn(f64, f64, f64) -> f64,
    V: Fn(f64, f64, f64) -> f64,
{
    let mut worst = 0.0_f64;
    for &(x, y, t) in samples {
        if x == 0.0 || y == 0.0 || !(t > 0.0) {
            return Err(ExactError::SingularSample { x, y, t });
        }
        let parts = |w: &dyn Fn(f64, f64, f64) -> f64| {
            let (wx, wxx) = central(|s| w(s, y, t), x);
            let (wy, wyy) = central(|s| w(x, s, t), y);
            let (wt, wtt) = central(|s| w(x, y, s), t);
            (w(x, y, t), wx, wy, wt, wxx + wyy, wtt)
        };
        let (u0, ux, uy, ut, lap_u, utt) = parts(&u);
        let (v0, vx, vy, vt, lap_v, vtt) = parts(&v);
        let damp = 2.0 * prob.a / t;
        let (fx, fy) = (2.0 * prob.lambda / x, 2.0 * prob.gamma / y);
        let mut r1 = utt + damp * vt - lap_u - fx * vx - fy * vy;
        let mut r2 = vtt + damp * ut - lap_v - fx * ux - fy * uy;
        if prob.nonlinear {
            r1 -= u0.abs().powf(prob.p - 1.0) * v0;
            r2 -= v0.abs().powf(prob.q - 1.0) * u0;
        }
        if let Some(forcing) = &prob.forcing {
            r1 -= (forcing.g1)(x, y, t);
            r2 -= (forcing.g2)(x, y, t);
        }
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(ExactError::NonFinite { x, y, t });
        }
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    Ok(worst)
}
