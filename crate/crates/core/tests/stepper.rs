use approx::assert_relative_eq;

use epd_core::stepper::init_levels;
use epd_core::{
    assemble_step_operators, build_grid, discrete_errors, l2_norm, manufactured, run, sample_at_level,
    solvability_margin, RunOptions, SolverKind,
};

#[test]
fn exact_seed_samples_the_gaussian() {
    let prob = manufactured::problem();
    let grid = build_grid(&manufactured::grid_spec(24)).unwrap();
    let (s0, s1) = init_levels(&prob, &grid).unwrap();
    assert_relative_eq!(grid.x[12], -0.4, epsilon = 1e-12);
    assert_relative_eq!(s0.u.values[[12, 12]], (-0.32f64).exp(), max_relative = 1e-12);
    assert_relative_eq!(s0.u.values[[12, 12]], 0.726149, epsilon = 1e-6);
    assert_eq!(s0.u.values, s0.v.values);
    assert_relative_eq!(grid.time(1), 0.8f64.powf(1.5), max_relative = 1e-15);
    assert_eq!(s1.level(), 1);
}

#[test]
fn benchmark_step_is_uniquely_solvable() {
    let prob = manufactured::problem();
    let grid = build_grid(&manufactured::grid_spec(24)).unwrap();
    let ops = assemble_step_operators(&prob.operator_set(&grid), &grid, 1, prob.alpha, prob.a).unwrap();
    let w = ops.w_alpha.to_dense();
    let margin = solvability_margin(&w, &w.t().to_owned(), &ops.r_pos.to_dense(), &ops.s_pos.to_dense()).unwrap();
    // Regression baseline. The difference branch W − R is close to singular
    // here: l·a_1/2 = 1.25 lies inside the spectrum [0.5, 1.3] of W_α.
    assert!(margin > 0.0);
    assert_relative_eq!(margin, 1.3408191810421882e-4, max_relative = 1e-6);
}

#[test]
fn kronecker_path_reproduces_benchmark_trajectory() {
    let prob = manufactured::problem();
    let spec = manufactured::grid_spec(24);
    let a = run(&prob, &spec, &RunOptions::default()).unwrap();
    let b = run(&prob, &spec, &RunOptions::default().with_solver(SolverKind::Kronecker)).unwrap();
    for (s, t) in a.trajectory.iter().zip(&b.trajectory) {
        assert!(l2_norm(&(&s.u.values - &t.u.values)) <= 1e-9);
        assert!(l2_norm(&(&s.v.values - &t.v.values)) <= 1e-9);
    }
}

#[test]
fn one_step_error_at_j24() {
    let prob = manufactured::problem();
    let spec = manufactured::grid_spec(24);
    let sim = run(&prob, &spec, &RunOptions::default()).unwrap();
    let t2 = sim.grid.time(2);
    let exact = sample_at_level(|x, y| manufactured::exact(x, y, t2), &sim.grid, 2).unwrap();
    let err = l2_norm(&(&sim.trajectory[2].u.values - &exact.values));
    let report = discrete_errors(
        &sim.trajectory,
        |x, y, t| {
            let g = manufactured::exact(x, y, t);
            (g, g)
        },
        &sim.grid,
    )
    .unwrap();
    assert_relative_eq!(report.u.er, err, max_relative = 1e-12);
    assert!(err < 0.1, "‖U² − u(t₂)‖ = {err}");
}
