//! Manufactured benchmark: `u = v = exp(−(t²/2 + r²))`.

use std::sync::Arc;

use crate::grid::{GridSpec, StepRule};
use crate::operators::SingularPolicy;
use crate::stepper::{Forcing, ProblemDef, Seed, SpaceTimeFn};

/// Benchmark parameters.
pub const A: f64 = 2.5;
pub const LAMBDA: f64 = 0.25;
pub const GAMMA: f64 = 0.25;
pub const P: f64 = 1.5;
pub const Q: f64 = 4.0 / 3.0;
pub const ALPHA: f64 = 0.25;
pub const L0: f64 = -10.0;
pub const L1: f64 = 10.0;
pub const T_FINAL: f64 = 1.0;

/// `exp(−k (t²/2 + r²))`.
pub fn g(k: f64, x: f64, y: f64, t: f64) -> f64 {
    (-k * (0.5 * t * t + x * x + y * y)).exp()
}

pub fn exact(x: f64, y: f64, t: f64) -> f64 {
    g(1.0, x, y, t)
}

/// Forcing that makes `u = v = g₁` an exact solution for arbitrary
/// `(a, λ, γ)` and exponent `k` of the nonlinear term:
/// `(t² + 3 − 2a − 4r² + 4(λ + γ)) g₁ − g_k`.
pub fn forcing_term(a: f64, lambda: f64, gamma: f64, k: f64, nonlinear: bool) -> SpaceTimeFn {
    Arc::new(move |x, y, t| {
        let r2 = x * x + y * y;
        let lin = (t * t + 3.0 - 2.0 * a - 4.0 * r2 + 4.0 * (lambda + gamma)) * g(1.0, x, y, t);
        if nonlinear {
            lin - g(k, x, y, t)
        } else {
            lin
        }
    })
}

/// Manufactured problem for the given coefficients, seeded from the exact solution.
pub fn problem_with(a: f64, lambda: f64, gamma: f64, p: f64, q: f64, alpha: f64) -> ProblemDef {
    let u: SpaceTimeFn = Arc::new(exact);
    ProblemDef {
        a,
        lambda,
        gamma,
        p,
        q,
        alpha,
        nonlinear: true,
        singular_policy: SingularPolicy::Limit,
        forcing: Some(Forcing {
            g1: forcing_term(a, lambda, gamma, p, true),
            g2: forcing_term(a, lambda, gamma, q, true),
        }),
        seed: Seed::Exact { u: u.clone(), v: u },
    }
}

/// The benchmark problem with its default parameters.
pub fn problem() -> ProblemDef {
    problem_with(A, LAMBDA, GAMMA, P, Q, ALPHA)
}

/// Benchmark grid: `[−10, 10]²`, `l = h^{3/2}`, `t ∈ [0, 1]`.
pub fn grid_spec(j: usize) -> GridSpec {
    GridSpec::new(L0, L1, j)
        .with_step_rule(StepRule::Coupled)
        .until(T_FINAL)
}
