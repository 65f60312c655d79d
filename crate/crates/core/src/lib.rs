//! Lyapunov-Sylvester finite-difference solver for the coupled nonlinear
//! Euler-Poisson-Darboux system on a square, with a Kronecker baseline,
//! closed-form and series oracles, and a benchmark harness.

pub mod bench;
pub mod exact;
pub mod grid;
pub mod kronecker;
pub mod linalg;
pub mod manufactured;
pub mod operators;
pub mod stepper;
pub mod sylvester;

pub use grid::{
    build_grid, discrete_errors, l2_norm, sample, sample_at_level, CoupledState, ErrorReport, Field, Grid, GridError,
    GridSpec, StepRule,
};
pub use kronecker::{kronecker_solve, kronecker_solve_with, KroneckerError, KroneckerOptions};
pub use operators::{
    assemble_step_operators, build_operator_set, build_operator_set_with, OperatorSet, SingularPolicy, StepOperators,
    TriDiag,
};
pub use stepper::{
    cfl_guard, convergence_order, run, ProblemDef, RunOptions, Seed, Simulation, SolverKind, StepReport, StepperError,
};
pub use sylvester::{
    solvability_margin, solve_coupled, solve_sylvester, CoupledError, CoupledProblem, Residual, SylvesterError,
    SylvesterProblem,
};
