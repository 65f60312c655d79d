//! Closed-form and series solutions used as oracles, with residual checks.

use thiserror::Error;

pub mod closed_form;
pub mod frobenius;
pub mod residual;
pub mod separable;

pub use closed_form::{stationary_additive, stationary_multiplicative, Certificate, ClosedForm, Family, Profile};
pub use frobenius::{
    evaluate_series, frobenius_coefficients, frobenius_indicial, frobenius_series, FrobeniusScalar, Indicial, Parity,
    SeriesSolution,
};
pub use residual::{ode_residual, pde_residual, standard_samples, FiniteDiff, RhsMode};
pub use separable::{separable_solution, SeparableOptions, SeparableSolution, SpatialPart};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("unsupported parameter combination: {0}")]
    InvalidBranch(String),
    #[error("the oscillatory branch needs K > 0, got {k}")]
    NonPositiveK { k: f64 },
    #[error("ν = {nu} is not an indicial root for λ = {lambda}")]
    NotIndicialRoot { lambda: f64, nu: f64 },
    #[error("recurrence denominator vanishes at index n = {index} (resonant exponents)")]
    Resonance { index: usize },
    #[error("truncation order {order} is below 2")]
    TruncationTooShort { order: usize },
    #[error("series with negative exponent is singular at x = {x}")]
    SingularPoint { x: f64 },
    #[error("sample ({x}, {y}, {t}) lies on a singular locus (x = 0, y = 0 or t ≤ 0)")]
    SingularSample { x: f64, y: f64, t: f64 },
    #[error("residual evaluation produced a non-finite value at ({x}, {y}, {t})")]
    NonFinite { x: f64, y: f64, t: f64 },
}

/// A real function of one variable with its first two derivatives.
pub trait Univariate {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}
