//! Time stepping for the coupled quasi-linear scheme.
//!
//! Each step solves
//!
//! ```text
//! W_α U + U W_αᵀ + R_{n,α} V + V S_{n,α} = C1
//! W_α V + V W_αᵀ + R_{n,α} U + U S_{n,α} = C2
//! ```
//!
//! for level `n + 1`, with the nonlinear terms and forcing taken explicitly
//! from levels `n` and `n − 1`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Array2;
use thiserror::Error;

use crate::grid::{build_grid, sample_at_level, CoupledState, Field, Grid, GridError, GridSpec};
use crate::kronecker::{kronecker_solve_with, KroneckerError, KroneckerOptions};
use crate::linalg::SchurError;
use crate::operators::{
    apply_x, apply_y, assemble_step_operators, build_operator_set_with, OperatorError, OperatorSet, SingularPolicy,
    StepOperators, TriDiag,
};
use crate::sylvester::{solvability_margin, solve_coupled, CoupledError, CoupledProblem, Residual};

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default sup-norm above which a run is declared unstable.
pub const DEFAULT_BLOWUP_CAP: f64 = 1e8;

#[derive(Debug, Error)]
pub enum StepperError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(
        "Taylor seeding at t0 = 0 with a = {a} hits the singular damping 2a/t; \
         enable regularization or seed from an exact solution"
    )]
    SingularSeed { a: f64 },
    #[error("forcing is not finite at level {level} (x = {x}, y = {y})")]
    NonFiniteForcing { level: usize, x: f64, y: f64 },
    #[error("step {step}: {source}")]
    Solve {
        step: usize,
        #[source]
        source: SolveError,
    },
    #[error("step {step}: sup-norm {sup_norm:.3e} exceeds blow-up cap {cap:.1e}")]
    BlowUp { step: usize, sup_norm: f64, cap: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("Sylvester path: {0}")]
    Sylvester(#[from] CoupledError),
    #[error("Kronecker path: {0}")]
    Kronecker(#[from] KroneckerError),
    #[error("solvability margin: {0}")]
    Margin(#[from] SchurError),
}

/// Forcing terms added to the right-hand sides of the two equations.
#[derive(Clone)]
pub struct Forcing {
    pub g1: SpaceTimeFn,
    pub g2: SpaceTimeFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaylorOrder {
    /// `U¹ = u0 + l·u1`.
    First,
    /// `U¹ = u0 + l·u1 + (l²/2)·u_tt(t0)`.
    Second,
}

/// Where the first two levels come from.
#[derive(Clone)]
pub enum Seed {
    /// Sample a known solution at `t0` and `t0 + l`.
    Exact { u: SpaceTimeFn, v: SpaceTimeFn },
    /// Initial values and velocities; `u_tt(t0)` is taken from the discrete PDE.
    Taylor {
        u0: SpaceFn,
        u1: SpaceFn,
        v0: SpaceFn,
        v1: SpaceFn,
        order: TaylorOrder,
        /// At `t0 = 0` replace `(2a/t) v_t` by its limit `2a·v_tt`, which is
        /// the regular branch when `v_t(0) = 0`.
        regularize: bool,
    },
}

/// Continuous problem data and the scheme weight.
#[derive(Clone)]
pub struct ProblemDef {
    pub a: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    /// Weight of levels `n ± 1` in the averaged Laplacian and gradients.
    pub alpha: f64,
    /// When false the `|u|^{p−1} v` and `|v|^{q−1} u` terms are dropped.
    pub nonlinear: bool,
    pub singular_policy: SingularPolicy,
    pub forcing: Option<Forcing>,
    pub seed: Seed,
}

impl std::fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemDef")
            .field("a", &self.a)
            .field("lambda", &self.lambda)
            .field("gamma", &self.gamma)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("alpha", &self.alpha)
            .field("nonlinear", &self.nonlinear)
            .field("singular_policy", &self.singular_policy)
            .field("forcing", &self.forcing.is_some())
            .field(
                "seed",
                &match self.seed {
                    Seed::Exact { .. } => "exact",
                    Seed::Taylor { .. } => "taylor",
                },
            )
            .finish()
    }
}

impl ProblemDef {
    pub fn operator_set(&self, grid: &Grid) -> OperatorSet {
        build_operator_set_with(grid, self.lambda, self.gamma, self.singular_policy)
    }

    pub fn validate(&self) -> Result<(), StepperError> {
        for (name, v) in [
            ("a", self.a),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
        ] {
            if !v.is_finite() {
                return Err(StepperError::InvalidProblem(format!("{name} must be finite")));
            }
        }
        if !(self.p > 1.0 && self.q > 1.0) {
            return Err(StepperError::InvalidProblem(format!(
                "exponents must satisfy p, q > 1 (got p = {}, q = {})",
                self.p, self.q
            )));
        }
        Ok(())
    }

    fn forcing_field(&self, which: usize, grid: &Grid, level: usize) -> Result<Array2<f64>, StepperError> {
        let n = grid.size();
        let Some(forcing) = &self.forcing else {
            return Ok(Array2::zeros((n, n)));
        };
        let g = if which == 0 { &forcing.g1 } else { &forcing.g2 };
        let t = grid.time(level);
        let mut out = Array2::zeros((n, n));
        for (j, &x) in grid.x.iter().enumerate() {
            for (m, &y) in grid.y.iter().enumerate() {
                let v = g(x, y, t);
                if !v.is_finite() {
                    return Err(StepperError::NonFiniteForcing { level, x, y });
                }
                out[[j, m]] = v;
            }
        }
        Ok(out)
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Index of the level produced by the step.
    pub n: usize,
    pub sup_norm: f64,
    pub residual_coupled: f64,
    /// Solvability margin of the coupled operator, when monitored.
    pub margin: Option<f64>,
    pub wall_time: Duration,
    pub solve_time: Duration,
}

/// `G(u, v) = |u|^{p−1} v`, entrywise.
pub fn nonlinear_g(x: &Array2<f64>, y: &Array2<f64>, p: f64) -> Array2<f64> {
    let mut out = y.clone();
    ndarray::Zip::from(&mut out).and(x).for_each(|o, &u| {
        *o = if u == 0.0 { 0.0 } else { u.abs().powf(p - 1.0) * *o };
    });
    out
}

/// `H(u, v) = |v|^{q−1} u`, entrywise.
pub fn nonlinear_h(x: &Array2<f64>, y: &Array2<f64>, q: f64) -> Array2<f64> {
    nonlinear_g(y, x, q)
}

/// Gradient term `<F, ∇z>` scaled by `h`: `Θ Z + Z Λ`.
fn gradient(opset: &OperatorSet, z: &Array2<f64>) -> Array2<f64> {
    apply_x(&opset.theta, z).expect("sizes checked") + apply_y(z, &opset.lambda).expect("sizes checked")
}

/// `A Z + Z Aᵀ`.
fn laplacian(opset: &OperatorSet, z: &Array2<f64>) -> Array2<f64> {
    apply_x(&opset.a, z).expect("sizes checked") + apply_y(z, &opset.a_t).expect("sizes checked")
}

/// `M Z + Z Mᵀ`.
fn lyap(m: &TriDiag, z: &Array2<f64>) -> Array2<f64> {
    apply_x(m, z).expect("sizes checked") + apply_y(z, &m.transpose()).expect("sizes checked")
}

/// Levels 0 and 1.
pub fn init_levels(prob: &ProblemDef, grid: &Grid) -> Result<(CoupledState, CoupledState), StepperError> {
    prob.validate()?;
    let t0 = grid.t0;
    let t1 = grid.time(1);
    match &prob.seed {
        Seed::Exact { u, v } => {
            let s0 = CoupledState::new(
                sample_at_level(|x, y| u(x, y, t0), grid, 0)?,
                sample_at_level(|x, y| v(x, y, t0), grid, 0)?,
            );
            let s1 = CoupledState::new(
                sample_at_level(|x, y| u(x, y, t1), grid, 1)?,
                sample_at_level(|x, y| v(x, y, t1), grid, 1)?,
            );
            Ok((s0, s1))
        }
        Seed::Taylor {
            u0,
            u1,
            v0,
            v1,
            order,
            regularize,
        } => {
            let u0 = sample_at_level(|x, y| u0(x, y), grid, 0)?.values;
            let v0 = sample_at_level(|x, y| v0(x, y), grid, 0)?.values;
            let u1 = sample_at_level(|x, y| u1(x, y), grid, 0)?.values;
            let v1 = sample_at_level(|x, y| v1(x, y), grid, 0)?.values;
            let l = grid.l;
            let mut next_u = &u0 + &(&u1 * l);
            let mut next_v = &v0 + &(&v1 * l);
            if *order == TaylorOrder::Second {
                let (utt, vtt) = second_derivatives(prob, grid, &u0, &v0, &u1, &v1, *regularize)?;
                next_u = next_u + utt * (0.5 * l * l);
                next_v = next_v + vtt * (0.5 * l * l);
            }
            Ok((
                CoupledState::new(Field::new(u0, 0), Field::new(v0, 0)),
                CoupledState::new(Field::new(next_u, 1), Field::new(next_v, 1)),
            ))
        }
    }
}

/// `(u_tt, v_tt)` at `t0` from the discrete operators.
fn second_derivatives(
    prob: &ProblemDef,
    grid: &Grid,
    u0: &Array2<f64>,
    v0: &Array2<f64>,
    u1: &Array2<f64>,
    v1: &Array2<f64>,
    regularize: bool,
) -> Result<(Array2<f64>, Array2<f64>), StepperError> {
    let opset = prob.operator_set(grid);
    let h = grid.h;
    let mut ru = laplacian(&opset, u0) / (h * h) + gradient(&opset, v0) / h;
    let mut rv = laplacian(&opset, v0) / (h * h) + gradient(&opset, u0) / h;
    if prob.nonlinear {
        ru = ru + nonlinear_g(u0, v0, prob.p);
        rv = rv + nonlinear_h(u0, v0, prob.q);
    }
    ru = ru + prob.forcing_field(0, grid, 0)?;
    rv = rv + prob.forcing_field(1, grid, 0)?;

    let t0 = grid.t0;
    if t0 > 0.0 {
        let gamma = 2.0 * prob.a / t0;
        return Ok((ru - v1 * gamma, rv - u1 * gamma));
    }
    if prob.a == 0.0 {
        return Ok((ru, rv));
    }
    if !regularize {
        return Err(StepperError::SingularSeed { a: prob.a });
    }
    // u_tt + 2a v_tt = ru, v_tt + 2a u_tt = rv.
    let k = 2.0 * prob.a;
    let det = 1.0 - k * k;
    if det.abs() < 1e-12 {
        return Err(StepperError::InvalidProblem(
            "regularized seeding is singular for a = ±1/2".into(),
        ));
    }
    let utt = (&ru - &(&rv * k)) / det;
    let vtt = (&rv - &(&ru * k)) / det;
    Ok((utt, vtt))
}

/// Right-hand sides `(C1, C2)` for the step producing level `n + 1`.
pub fn assemble_rhs(
    current: &CoupledState,
    previous: &CoupledState,
    ops: &StepOperators,
    opset: &OperatorSet,
    prob: &ProblemDef,
    grid: &Grid,
) -> Result<(Array2<f64>, Array2<f64>), StepperError> {
    let n = ops.n;
    let sigma_h = grid.sigma * grid.h;
    let half_l2 = 0.5 * grid.l * grid.l;
    let history = 1.0 - 2.0 * prob.alpha;

    let f1 = prob.forcing_field(0, grid, n)? + prob.forcing_field(0, grid, n - 1)?;
    let f2 = prob.forcing_field(1, grid, n)? + prob.forcing_field(1, grid, n - 1)?;

    let one = |z_n: &Array2<f64>, z_prev: &Array2<f64>, w_n: &Array2<f64>, w_prev: &Array2<f64>| {
        let mut c = lyap(&ops.w_alpha_minus_half, z_n) * 2.0 - lyap(&ops.w_alpha, z_prev);
        if history != 0.0 {
            c = c + gradient(opset, w_n) * (history * sigma_h);
        }
        c + apply_x(&ops.r_neg, w_prev).expect("sizes checked") + apply_y(w_prev, &ops.s_neg).expect("sizes checked")
    };

    let (un, vn) = (&current.u.values, &current.v.values);
    let (up, vp) = (&previous.u.values, &previous.v.values);
    let mut c1 = one(un, up, vn, vp);
    let mut c2 = one(vn, vp, un, up);
    if prob.nonlinear {
        c1 = c1 + (nonlinear_g(un, vn, prob.p) + nonlinear_g(up, vp, prob.p)) * half_l2;
        c2 = c2 + (nonlinear_h(un, vn, prob.q) + nonlinear_h(up, vp, prob.q)) * half_l2;
    }
    if prob.forcing.is_some() {
        c1 = c1 + f1 * half_l2;
        c2 = c2 + f2 * half_l2;
    }
    Ok((c1, c2))
}

/// Algebraic route for the per-step coupled solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Sylvester,
    Kronecker,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub solver: SolverKind,
    pub blowup_cap: f64,
    pub monitor_margin: bool,
    pub kronecker: KroneckerOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Sylvester,
            blowup_cap: DEFAULT_BLOWUP_CAP,
            monitor_margin: false,
            kronecker: KroneckerOptions::default(),
        }
    }
}

impl RunOptions {
    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }
}

pub fn step_problem(ops: &StepOperators, c1: Array2<f64>, c2: Array2<f64>) -> CoupledProblem {
    CoupledProblem::lyapunov(
        ops.w_alpha.to_dense(),
        ops.r_pos.to_dense(),
        ops.s_pos.to_dense(),
        c1,
        c2,
    )
}

/// One step: level `n + 1` from levels `n` and `n − 1`.
pub fn step(
    current: &CoupledState,
    previous: &CoupledState,
    opset: &OperatorSet,
    prob: &ProblemDef,
    grid: &Grid,
    opts: &RunOptions,
) -> Result<(CoupledState, StepReport), StepperError> {
    let started = Instant::now();
    let n = current.level();
    let ops = assemble_step_operators(opset, grid, n, prob.alpha, prob.a)?;
    let (c1, c2) = assemble_rhs(current, previous, &ops, opset, prob, grid)?;
    let problem = step_problem(&ops, c1, c2);

    let solve_err = |source: SolveError| StepperError::Solve { step: n + 1, source };
    let margin = if opts.monitor_margin {
        Some(
            solvability_margin(&problem.w_left, &problem.w_right, &problem.r, &problem.s)
                .map_err(|e| solve_err(e.into()))?,
        )
    } else {
        None
    };

    let solve_started = Instant::now();
    let (u, v) = match opts.solver {
        SolverKind::Sylvester => solve_coupled(&problem).map_err(|e| solve_err(e.into()))?,
        SolverKind::Kronecker => kronecker_solve_with(&problem, opts.kronecker).map_err(|e| solve_err(e.into()))?,
    };
    let solve_time = solve_started.elapsed();
    let residual_coupled = problem.residual(&(u.clone(), v.clone()));

    let state = CoupledState::new(Field::new(u, n + 1), Field::new(v, n + 1));
    let report = StepReport {
        n: n + 1,
        sup_norm: state.sup_norm(),
        residual_coupled,
        margin,
        wall_time: started.elapsed(),
        solve_time,
    };
    Ok((state, report))
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct Simulation {
    pub grid: Grid,
    pub trajectory: Vec<CoupledState>,
    pub reports: Vec<StepReport>,
    pub cfl: CflReport,
}

impl Simulation {
    pub fn max_residual(&self) -> f64 {
        self.reports.iter().fold(0.0, |m, r| m.max(r.residual_coupled))
    }

    pub fn total_time(&self) -> Duration {
        self.reports.iter().map(|r| r.wall_time).sum()
    }

    pub fn solve_time(&self) -> Duration {
        self.reports.iter().map(|r| r.solve_time).sum()
    }
}

pub fn run(prob: &ProblemDef, spec: &GridSpec, opts: &RunOptions) -> Result<Simulation, StepperError> {
    let grid = build_grid(spec)?;
    run_on_grid(prob, grid, opts)
}

pub fn run_on_grid(prob: &ProblemDef, grid: Grid, opts: &RunOptions) -> Result<Simulation, StepperError> {
    prob.validate()?;
    if grid.n_steps < 2 {
        return Err(StepperError::InvalidProblem(format!(
            "need at least 2 time levels beyond the initial one, got n_steps = {}",
            grid.n_steps
        )));
    }
    let opset = prob.operator_set(&grid);
    let cfl = cfl_guard(&grid, prob.alpha, &opset);
    let (s0, s1) = init_levels(prob, &grid)?;
    let mut trajectory = Vec::with_capacity(grid.n_steps + 1);
    trajectory.push(s0);
    trajectory.push(s1);
    let mut reports = Vec::with_capacity(grid.n_steps - 1);
    for _ in 1..grid.n_steps {
        let k = trajectory.len();
        let (next, report) = step(&trajectory[k - 1], &trajectory[k - 2], &opset, prob, &grid, opts)?;
        if !(report.sup_norm <= opts.blowup_cap) {
            return Err(StepperError::BlowUp {
                step: report.n,
                sup_norm: report.sup_norm,
                cap: opts.blowup_cap,
            });
        }
        trajectory.push(next);
        reports.push(report);
    }
    Ok(Simulation {
        grid,
        trajectory,
        reports,
        cfl,
    })
}

/// Sufficient stability condition `4 σ C_α < 1` with
/// `C_α = α [4 + h (max|λ_j| + max|γ_m|)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub ok: bool,
    pub c_alpha: f64,
    /// `4 σ C_α`.
    pub value: f64,
}

pub fn cfl_guard(grid: &Grid, alpha: f64, opset: &OperatorSet) -> CflReport {
    let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let c_alpha = alpha * (4.0 + grid.h * (max_abs(&opset.lambda_j) + max_abs(&opset.gamma_m)));
    let value = 4.0 * grid.sigma * c_alpha;
    CflReport {
        ok: value < 1.0,
        c_alpha,
        value,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("need at least two grid levels, got {0}")]
    TooFew(usize),
    #[error("mesh sizes must be positive, finite and not all equal")]
    DegenerateMesh,
    #[error("error values must be finite and non-negative")]
    InvalidError,
}

/// Least-squares slope of `log Er` against `log h`. Any exact reproduction
/// (`Er = 0`) yields `+∞`.
pub fn convergence_order(samples: &[(f64, f64)]) -> Result<f64, OrderError> {
    if samples.len() < 2 {
        return Err(OrderError::TooFew(samples.len()));
    }
    if samples.iter().any(|&(h, _)| !(h.is_finite() && h > 0.0)) {
        return Err(OrderError::DegenerateMesh);
    }
    if samples.iter().any(|&(_, e)| !(e.is_finite() && e >= 0.0)) {
        return Err(OrderError::InvalidError);
    }
    if samples.iter().any(|&(_, e)| e == 0.0) {
        return Ok(f64::INFINITY);
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(OrderError::DegenerateMesh);
    }
    Ok(sxy / sxx)
}
