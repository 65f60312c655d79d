//! Self-checks run before trusting a benchmark configuration.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::exact::{
    frobenius_coefficients, frobenius_series, ode_residual, separable_solution, stationary_additive, RhsMode,
    SeparableOptions,
};
use crate::operators::SingularPolicy;
use crate::stepper::{run, ProblemDef, RunOptions, Seed, SolverKind, SpaceTimeFn};

use super::config::RunConfig;
use super::table::{forcing_certificate, FORCING_CERTIFICATE_TOL};
use super::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl Check {
    fn bound(name: &'static str, value: f64, tol: f64) -> Self {
        Self {
            name,
            value,
            tol,
            passed: value <= tol,
            detail: None,
        }
    }

    fn failed(name: &'static str, tol: f64, detail: String) -> Self {
        Self {
            name,
            value: f64::NAN,
            tol,
            passed: false,
            detail: Some(detail),
        }
    }

    fn from_result(name: &'static str, tol: f64, r: Result<f64, BenchError>) -> Self {
        match r {
            Ok(v) => Self::bound(name, v, tol),
            Err(e) => Self::failed(name, tol, e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `1 / (4^k (k!)²)` at `n = 2k`, zero at odd `n`.
pub fn i0_coefficient(n: usize) -> BigRational {
    if n % 2 == 1 {
        return BigRational::zero();
    }
    let k = n / 2;
    let mut den = BigInt::one();
    for i in 1..=k {
        den *= BigInt::from(4 * i * i);
    }
    BigRational::new(BigInt::one(), den)
}

/// Number of exact rational mismatches between the series engine and the
/// closed-form `I0` coefficients up to `order`.
pub fn i0_rational_mismatches(order: usize) -> Result<usize, BenchError> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let coeffs = frobenius_series(
        &half,
        &BigRational::zero(),
        &BigRational::one(),
        order,
        BigRational::one(),
        BigRational::zero(),
    )?;
    Ok(coeffs
        .iter()
        .enumerate()
        .filter(|(n, c)| **c != i0_coefficient(*n))
        .count())
}

/// ODE residual of the order-40 `I0` series on `0 < |x| ≤ 1`.
pub fn i0_ode_residual() -> Result<f64, BenchError> {
    let s = frobenius_coefficients(0.5, 0.0, 1.0, 40, 1.0, 0.0)?;
    let xs: Vec<f64> = (1..=20)
        .flat_map(|k| {
            let x = 0.05 * k as f64;
            [-x, x]
        })
        .collect();
    Ok(ode_residual(&s, 0.5, 1.0, RhsMode::Eigen, &xs)?)
}

/// Largest entrywise gap between the Sylvester and Kronecker trajectories.
pub fn solver_gap(cfg: &RunConfig, j: usize) -> Result<f64, BenchError> {
    let prob = cfg.problem();
    let spec = cfg.grid_spec(j);
    let a = run(&prob, &spec, &RunOptions::default().with_solver(SolverKind::Sylvester))?;
    let b = run(&prob, &spec, &RunOptions::default().with_solver(SolverKind::Kronecker))?;
    let mut gap = 0.0_f64;
    for (s, t) in a.trajectory.iter().zip(&b.trajectory) {
        gap = gap.max((&s.u.values - &t.u.values).fold(0.0, |m, x| m.max(x.abs())));
        gap = gap.max((&s.v.values - &t.v.values).fold(0.0, |m, x| m.max(x.abs())));
    }
    Ok(gap)
}

/// Unforced nonlinear problem with zero initial data.
pub fn zero_problem(cfg: &RunConfig) -> ProblemDef {
    let zero: SpaceTimeFn = Arc::new(|_, _, _| 0.0);
    ProblemDef {
        a: cfg.a,
        lambda: cfg.lambda,
        gamma: cfg.gamma,
        p: cfg.p,
        q: cfg.q,
        alpha: cfg.alpha,
        nonlinear: true,
        singular_policy: SingularPolicy::Limit,
        forcing: None,
        seed: Seed::Exact {
            u: zero.clone(),
            v: zero,
        },
    }
}

/// Sup-norm of the trajectory started from zero data.
pub fn zero_trajectory_sup(cfg: &RunConfig, j: usize) -> Result<f64, BenchError> {
    let sim = run(&zero_problem(cfg), &cfg.grid_spec(j), &RunOptions::default())?;
    Ok(sim.trajectory.iter().map(|s| s.sup_norm()).fold(0.0, f64::max))
}

fn closed_form_certificate(cfg: &RunConfig) -> Result<f64, BenchError> {
    let c = stationary_additive(cfg.lambda, cfg.gamma, 1.5, 1.0, 0.5)?;
    Ok(c.certificate.stated)
}

fn separable_certificate(cfg: &RunConfig) -> Result<f64, BenchError> {
    let s = Arc::new(separable_solution(
        cfg.lambda,
        cfg.gamma,
        cfg.a,
        0.8,
        0.4,
        SeparableOptions::default(),
    )?);
    Ok(s.certificate()?)
}

/// Runs every self-check for the configuration. Cross-solver and zero-data
/// runs use `J = 4`.
pub fn validate(cfg: &RunConfig) -> ValidationReport {
    let checks = vec![
        Check::from_result("forcing certificate", FORCING_CERTIFICATE_TOL, forcing_certificate(cfg)),
        Check::from_result(
            "I0 rational coefficients (mismatches, n <= 20)",
            0.0,
            i0_rational_mismatches(20).map(|m| m as f64),
        ),
        Check::from_result("I0 series ODE residual (N = 40, |x| <= 1)", 1e-8, i0_ode_residual()),
        Check::from_result("Sylvester vs Kronecker trajectory (J = 4)", 1e-9, solver_gap(cfg, 4)),
        Check::from_result("zero data stays zero (J = 4)", 1e-14, zero_trajectory_sup(cfg, 4)),
        Check::from_result("stationary additive certificate", 1e-8, closed_form_certificate(cfg)),
        Check::from_result("separable solution certificate", 1e-6, separable_certificate(cfg)),
    ];
    ValidationReport { checks }
}
