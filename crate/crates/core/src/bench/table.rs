//! Accuracy and timing table for the manufactured benchmark.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Duration;

use crate::exact::pde_residual;
use crate::grid::{discrete_errors, ErrorReport, GridSpec};
use crate::kronecker::DEFAULT_MAX_SIZE;
use crate::manufactured;
use crate::stepper::{convergence_order, run, ProblemDef, RunOptions, Simulation, SolverKind};

use super::config::RunConfig;
use super::BenchError;

pub const CSV_HEADER: [&str; 10] = [
    "J",
    "h",
    "l",
    "Er_II",
    "RelEr_II",
    "Er_I",
    "RelEr_I",
    "time_II_ms",
    "time_I_ms",
    "ratio",
];

/// Bound on the forcing certificate checked before any row is produced.
pub const FORCING_CERTIFICATE_TOL: f64 = 1e-5;

/// Repetitions per timed run; the median is reported.
pub const TIMING_REPEATS: usize = 3;

/// One table row. Method II is the Sylvester path, Method I the Kronecker
/// path; cells of a skipped or failed path are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub j: usize,
    pub h: f64,
    pub l: f64,
    pub er_ii: f64,
    pub rel_ii: f64,
    pub er_i: f64,
    pub rel_i: f64,
    pub time_ii_ms: f64,
    pub time_i_ms: f64,
    /// `time_I / time_II`.
    pub ratio: f64,
    /// Fitted order of `Er_II` over this row and all previous ones.
    pub order_estimate: f64,
}

/// Per-row information that does not go to the CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowDiagnostics {
    pub solve_ii_ms: f64,
    pub solve_i_ms: f64,
    pub max_residual_ii: f64,
    pub max_residual_i: f64,
    pub errors_ii: Option<ErrorReport>,
    pub errors_i: Option<ErrorReport>,
    /// Largest entrywise difference between the two trajectories.
    pub trajectory_gap: Option<f64>,
    /// `4σC_α`.
    pub cfl: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub rows: Vec<BenchRow>,
    pub diagnostics: Vec<RowDiagnostics>,
    pub forcing_certificate: f64,
}

/// 5×5×5 box with `x, y ≠ 0` and `t ∈ [0.2, 1]`.
pub fn certificate_samples() -> Vec<(f64, f64, f64)> {
    let xs = [-1.3, -0.6, 0.4, 0.9, 1.7];
    let ys = [-1.1, -0.3, 0.5, 1.2, 2.0];
    let ts = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut out = Vec::with_capacity(125);
    for &x in &xs {
        for &y in &ys {
            for &t in &ts {
                out.push((x, y, t));
            }
        }
    }
    out
}

pub fn forcing_certificate(cfg: &RunConfig) -> Result<f64, BenchError> {
    let prob = cfg.problem();
    Ok(pde_residual(
        manufactured::exact,
        manufactured::exact,
        &prob,
        &certificate_samples(),
    )?)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

struct Timed {
    sim: Simulation,
    errors: ErrorReport,
    wall_ms: f64,
    solve_ms: f64,
}

fn timed_run(cfg: &RunConfig, j: usize, solver: SolverKind, repeats: usize) -> Result<Timed, String> {
    let prob = cfg.problem();
    let spec = cfg.grid_spec(j);
    let opts = RunOptions::default().with_solver(solver);
    let mut walls = Vec::with_capacity(repeats);
    let mut solves = Vec::with_capacity(repeats);
    let mut first = None;
    for _ in 0..repeats.max(1) {
        let sim = run(&prob, &spec, &opts).map_err(|e| e.to_string())?;
        walls.push(ms(sim.total_time()));
        solves.push(ms(sim.solve_time()));
        if first.is_none() {
            first = Some(sim);
        }
    }
    let sim = first.expect("at least one repetition");
    let errors = discrete_errors(&sim.trajectory, exact_pair, &sim.grid).map_err(|e| e.to_string())?;
    Ok(Timed {
        sim,
        errors,
        wall_ms: median(walls),
        solve_ms: median(solves),
    })
}

fn exact_pair(x: f64, y: f64, t: f64) -> (f64, f64) {
    let g = manufactured::exact(x, y, t);
    (g, g)
}

fn trajectory_gap(a: &Simulation, b: &Simulation) -> f64 {
    a.trajectory
        .iter()
        .zip(&b.trajectory)
        .flat_map(|(s, t)| {
            s.u.values
                .iter()
                .zip(t.u.values.iter())
                .chain(s.v.values.iter().zip(t.v.values.iter()))
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Runs the benchmark for every `J` in the configuration. Solver failures
/// are recorded on the row; the forcing certificate must pass first.
pub fn run_table1(cfg: &RunConfig) -> Result<Table1, BenchError> {
    run_table1_with(cfg, TIMING_REPEATS)
}

pub fn run_table1_with(cfg: &RunConfig, repeats: usize) -> Result<Table1, BenchError> {
    let certificate = forcing_certificate(cfg)?;
    if !(certificate <= FORCING_CERTIFICATE_TOL) {
        return Err(BenchError::ForcingCertificate {
            residual: certificate,
            tol: FORCING_CERTIFICATE_TOL,
        });
    }
    let mut rows = Vec::with_capacity(cfg.js.len());
    let mut diagnostics = Vec::with_capacity(cfg.js.len());
    for &j in &cfg.js {
        let spec = cfg.grid_spec(j);
        let mut row = BenchRow {
            j,
            h: spec.h(),
            l: spec.l(),
            er_ii: f64::NAN,
            rel_ii: f64::NAN,
            er_i: f64::NAN,
            rel_i: f64::NAN,
            time_ii_ms: f64::NAN,
            time_i_ms: f64::NAN,
            ratio: f64::NAN,
            order_estimate: f64::NAN,
        };
        let mut diag = RowDiagnostics {
            solve_ii_ms: f64::NAN,
            solve_i_ms: f64::NAN,
            max_residual_ii: f64::NAN,
            max_residual_i: f64::NAN,
            cfl: f64::NAN,
            ..RowDiagnostics::default()
        };
        let mut sims = (None, None);
        if cfg.solver.sylvester() {
            match timed_run(cfg, j, SolverKind::Sylvester, repeats) {
                Ok(t) => {
                    row.er_ii = t.errors.er();
                    row.rel_ii = t.errors.rel();
                    row.time_ii_ms = t.wall_ms;
                    diag.solve_ii_ms = t.solve_ms;
                    diag.max_residual_ii = t.sim.max_residual();
                    diag.errors_ii = Some(t.errors);
                    diag.cfl = t.sim.cfl.value;
                    sims.0 = Some(t.sim);
                }
                Err(e) => diag.failures.push(format!("sylvester: {e}")),
            }
        }
        if cfg.solver.kronecker() {
            if j + 2 > DEFAULT_MAX_SIZE {
                diag.failures
                    .push(format!("kronecker: skipped, size {} exceeds {DEFAULT_MAX_SIZE}", j + 2));
            } else {
                match timed_run(cfg, j, SolverKind::Kronecker, repeats) {
                    Ok(t) => {
                        row.er_i = t.errors.er();
                        row.rel_i = t.errors.rel();
                        row.time_i_ms = t.wall_ms;
                        diag.solve_i_ms = t.solve_ms;
                        diag.max_residual_i = t.sim.max_residual();
                        diag.errors_i = Some(t.errors);
                        diag.cfl = t.sim.cfl.value;
                        sims.1 = Some(t.sim);
                    }
                    Err(e) => diag.failures.push(format!("kronecker: {e}")),
                }
            }
        }
        if let (Some(a), Some(b)) = (&sims.0, &sims.1) {
            diag.trajectory_gap = Some(trajectory_gap(a, b));
        }
        row.ratio = row.time_i_ms / row.time_ii_ms;
        rows.push(row);
        diagnostics.push(diag);
    }
    fill_order_estimates(&mut rows);
    Ok(Table1 {
        rows,
        diagnostics,
        forcing_certificate: certificate,
    })
}

/// Cumulative fitted order of `Er_II`; NaN until two finite rows exist.
pub fn fill_order_estimates(rows: &mut [BenchRow]) {
    let mut pts = Vec::new();
    for row in rows.iter_mut() {
        if row.er_ii.is_finite() {
            pts.push((row.h, row.er_ii));
        }
        row.order_estimate = convergence_order(&pts).unwrap_or(f64::NAN);
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(&[
            r.j.to_string(),
            r.h.to_string(),
            r.l.to_string(),
            r.er_ii.to_string(),
            r.rel_ii.to_string(),
            r.er_i.to_string(),
            r.rel_i.to_string(),
            r.time_ii_ms.to_string(),
            r.time_i_ms.to_string(),
            r.ratio.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(BenchError::Csv(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64, BenchError> {
            rec[i]
                .parse()
                .map_err(|_| BenchError::Csv(format!("bad number {:?} in column {}", &rec[i], CSV_HEADER[i])))
        };
        rows.push(BenchRow {
            j: rec[0]
                .parse()
                .map_err(|_| BenchError::Csv(format!("bad J {:?}", &rec[0])))?,
            h: f(1)?,
            l: f(2)?,
            er_ii: f(3)?,
            rel_ii: f(4)?,
            er_i: f(5)?,
            rel_i: f(6)?,
            time_ii_ms: f(7)?,
            time_i_ms: f(8)?,
            ratio: f(9)?,
            order_estimate: f64::NAN,
        });
    }
    fill_order_estimates(&mut rows);
    Ok(rows)
}

pub fn write_csv_file(rows: &[BenchRow], path: &Path) -> Result<(), BenchError> {
    write_csv(rows, std::fs::File::create(path)?)
}

/// Whitespace-separated columns `J h Er_II Er_I RelEr_II RelEr_I` for plotting.
pub fn write_dat<W: Write>(rows: &[BenchRow], mut out: W) -> Result<(), BenchError> {
    writeln!(out, "# J h Er_II Er_I RelEr_II RelEr_I")?;
    for r in rows {
        writeln!(out, "{} {} {} {} {} {}", r.j, r.h, r.er_ii, r.er_i, r.rel_ii, r.rel_i)?;
    }
    Ok(())
}

/// `(h, Er)` table and fitted order for a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub js: Vec<usize>,
    pub hs: Vec<f64>,
    pub errors: Vec<ErrorReport>,
    /// Fitted order of `Er`.
    pub order: f64,
    /// Fitted order of `h·Er`, the mesh-weighted discrete L2 error.
    pub scaled_order: f64,
}

/// Sylvester-path runs of `prob` on each grid, measured against `exact`.
pub fn convergence_study<E>(prob: &ProblemDef, exact: E, specs: &[GridSpec]) -> Result<ConvergenceReport, BenchError>
where
    E: Fn(f64, f64, f64) -> (f64, f64),
{
    if specs.len() < 3 {
        return Err(BenchError::TooFewLevels(specs.len()));
    }
    let mut hs = Vec::with_capacity(specs.len());
    let mut errors = Vec::with_capacity(specs.len());
    for spec in specs {
        let sim = run(prob, spec, &RunOptions::default())?;
        errors.push(discrete_errors(&sim.trajectory, &exact, &sim.grid)?);
        hs.push(sim.grid.h);
    }
    let pts: Vec<_> = hs.iter().zip(&errors).map(|(&h, e)| (h, e.er())).collect();
    let scaled: Vec<_> = pts.iter().map(|&(h, e)| (h, h * e)).collect();
    Ok(ConvergenceReport {
        js: specs.iter().map(|s| s.j).collect(),
        order: convergence_order(&pts)?,
        scaled_order: convergence_order(&scaled)?,
        hs,
        errors,
    })
}

/// Manufactured-problem study of the configuration at each `J`.
pub fn run_convergence(cfg: &RunConfig, js: &[usize]) -> Result<ConvergenceReport, BenchError> {
    let specs: Vec<GridSpec> = js.iter().map(|&j| cfg.grid_spec(j)).collect();
    convergence_study(&cfg.problem(), exact_pair, &specs)
}
