//! Separable solutions `u = v = ψ(t) φ(x, y)` of the linear system.
//!
//! `ψ'' + (2a/t) ψ' = K ψ` and `Δφ + <F, ∇φ> = K φ`. With `φ = f(x) + g(y)`:
//! `f'' + (2λ/x) f' − K f = K̃`, `g'' + (2γ/y) g' − K g = −K̃`.

use std::sync::Arc;

use super::closed_form::{stationary_additive, ClosedForm};
use super::frobenius::{frobenius_coefficients, SeriesSolution};
use super::residual::pde_residual;
use super::{ExactError, Univariate};
use crate::operators::SingularPolicy;
use crate::stepper::{ProblemDef, Seed, SpaceTimeFn};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableOptions {
    /// Series truncation order for every series component.
    pub terms: usize,
    /// `ψ(0)`.
    pub psi_a0: f64,
    /// Leading coefficients of the homogeneous `f` and `g` series (`K ≠ 0`).
    pub f_a0: f64,
    pub g_a0: f64,
    /// Homogeneous weights of the additive pair (`K = 0`).
    pub k1: f64,
    pub k2: f64,
}

impl Default for SeparableOptions {
    fn default() -> Self {
        Self {
            terms: 60,
            psi_a0: 1.0,
            f_a0: 1.0,
            g_a0: 1.0,
            k1: 1.0,
            k2: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialPart {
    /// `K = 0`: additive stationary pair with `K̃` in place of `K`.
    Additive(ClosedForm),
    /// `K ≠ 0`: `f = f_H − K̃/K`, `g = g_H + K̃/K`.
    Series {
        f_h: SeriesSolution,
        g_h: SeriesSolution,
        f_shift: f64,
        g_shift: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSolution {
    pub a: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub k: f64,
    pub k_tilde: f64,
    pub psi: SeriesSolution,
    pub phi: SpatialPart,
}

impl SeparableSolution {
    pub fn psi(&self, t: f64) -> f64 {
        self.psi.value(t)
    }

    pub fn f(&self, x: f64) -> f64 {
        match &self.phi {
            SpatialPart::Additive(c) => c.f(x),
            SpatialPart::Series { f_h, f_shift, .. } => f_h.value(x) + f_shift,
        }
    }

    pub fn g(&self, y: f64) -> f64 {
        match &self.phi {
            SpatialPart::Additive(c) => c.g(y),
            SpatialPart::Series { g_h, g_shift, .. } => g_h.value(y) + g_shift,
        }
    }

    pub fn phi(&self, x: f64, y: f64) -> f64 {
        self.f(x) + self.g(y)
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self.psi(t) * self.phi(x, y)
    }

    /// Linear, unforced problem with this solution's coefficients, seeded
    /// from the solution itself.
    pub fn problem(self: &Arc<Self>) -> ProblemDef {
        let me = Arc::clone(self);
        let u: SpaceTimeFn = Arc::new(move |x, y, t| me.value(x, y, t));
        ProblemDef {
            a: self.a,
            lambda: self.lambda,
            gamma: self.gamma,
            p: 2.0,
            q: 2.0,
            alpha: 0.25,
            nonlinear: false,
            singular_policy: SingularPolicy::Limit,
            forcing: None,
            seed: Seed::Exact { u: u.clone(), v: u },
        }
    }

    /// PDE residual certificate over `x, y ∈ {±0.5, ±1, ±1.5}`, `t ∈ {0.2, 0.6, 1}`.
    pub fn certificate(self: &Arc<Self>) -> Result<f64, ExactError> {
        let pts = [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5];
        let mut samples = Vec::new();
        for &x in &pts {
            for &y in &pts {
                for &t in &[0.2, 0.6, 1.0] {
                    samples.push((x, y, t));
                }
            }
        }
        let prob = self.problem();
        let u = |x, y, t| self.value(x, y, t);
        pde_residual(u, u, &prob, &samples)
    }
}

/// Builds `ψ` from the Frobenius engine in `t` (with `a` in place of `λ`,
/// regular root `ν = 0`) and `φ` from the additive builder (`K = 0`) or the
/// homogeneous series plus the constant pair `(−K̃/K, K̃/K)` (`K ≠ 0`).
pub fn separable_solution(
    lambda: f64,
    gamma: f64,
    a: f64,
    k: f64,
    k_tilde: f64,
    opts: SeparableOptions,
) -> Result<SeparableSolution, ExactError> {
    let psi = frobenius_coefficients(a, 0.0, k, opts.terms, opts.psi_a0, 0.0)?;
    let phi = if k == 0.0 {
        SpatialPart::Additive(stationary_additive(lambda, gamma, k_tilde, opts.k1, opts.k2)?)
    } else {
        SpatialPart::Series {
            f_h: frobenius_coefficients(lambda, 0.0, k, opts.terms, opts.f_a0, 0.0)?,
            g_h: frobenius_coefficients(gamma, 0.0, k, opts.terms, opts.g_a0, 0.0)?,
            f_shift: -k_tilde / k,
            g_shift: k_tilde / k,
        }
    };
    Ok(SeparableSolution {
        a,
        lambda,
        gamma,
        k,
        k_tilde,
        psi,
        phi,
    })
}
