use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use epd_core::bench::{
    emit_series_table, parse_config, parse_j_list, run_convergence, run_table1_with, series_table, validate,
    write_csv_file, write_dat, BenchRow, RunConfig, SolverChoice,
};
use epd_core::{discrete_errors, manufactured, run, RunOptions, Simulation, SolverKind};

/// Order window checked by `converge --check`.
const ORDER_WINDOW: (f64, f64) = (1.5, 2.5);

#[derive(Parser)]
#[command(
    name = "epd",
    version,
    about = "Lyapunov-Sylvester solver for the coupled EPD system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the manufactured problem for every J in the config and report errors.
    Solve {
        config: PathBuf,
        /// Write the final level as `x y u v` rows (one file per J, suffixed `_J<n>`).
        #[arg(long)]
        dat: Option<PathBuf>,
    },
    /// Accuracy and timing table for both solver paths.
    Bench {
        config: PathBuf,
        /// CSV output; overrides `out_csv` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Timed repetitions per run.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Refinement study with a fitted convergence order.
    Converge {
        config: PathBuf,
        /// Comma-separated resolutions; defaults to the config's J list.
        #[arg(long = "J", value_parser = parse_js)]
        js: Option<JList>,
        /// Exit with status 2 when the order leaves [1.5, 2.5].
        #[arg(long)]
        check: bool,
    },
    /// Frobenius coefficient table `n, a_n`.
    Series {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long = "K", allow_hyphen_values = true)]
        k: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every oracle check for the config.
    Validate { config: PathBuf },
}

#[derive(Debug, Clone)]
struct JList(Vec<usize>);

fn parse_js(s: &str) -> Result<JList, String> {
    parse_j_list(s).map(JList)
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing {}", path.display()))
}

fn exact_pair(x: f64, y: f64, t: f64) -> (f64, f64) {
    let g = manufactured::exact(x, y, t);
    (g, g)
}

fn solvers(choice: SolverChoice) -> Vec<SolverKind> {
    let mut out = Vec::new();
    if choice.sylvester() {
        out.push(SolverKind::Sylvester);
    }
    if choice.kronecker() {
        out.push(SolverKind::Kronecker);
    }
    out
}

fn write_final_level(sim: &Simulation, path: &Path) -> Result<()> {
    let last = sim.trajectory.last().context("empty trajectory")?;
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# t = {}", sim.grid.time(last.level()))?;
    for (i, &x) in sim.grid.x.iter().enumerate() {
        for (k, &y) in sim.grid.y.iter().enumerate() {
            writeln!(f, "{x} {y} {} {}", last.u.values[[i, k]], last.v.values[[i, k]])?;
        }
        writeln!(f)?;
    }
    Ok(())
}

fn suffixed(path: &Path, j: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_J{j}.{ext}"),
        None => format!("{stem}_J{j}"),
    };
    path.with_file_name(name)
}

fn cmd_solve(config: &Path, dat: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let prob = cfg.problem();
    println!(
        "{:>4} {:>10} {:>10} {:>5} {:>9} {:>12} {:>10} {:>10} {:>10}",
        "J", "h", "l", "steps", "t_end", "solver", "Er", "RelEr", "residual"
    );
    for &j in &cfg.js {
        let spec = cfg.grid_spec(j);
        for solver in solvers(cfg.solver) {
            let sim = run(&prob, &spec, &RunOptions::default().with_solver(solver))
                .with_context(|| format!("J = {j}, {solver:?}"))?;
            let err = discrete_errors(&sim.trajectory, exact_pair, &sim.grid)?;
            println!(
                "{:>4} {:>10.4} {:>10.4} {:>5} {:>9.4} {:>12} {:>10.4e} {:>10.4e} {:>10.2e}",
                j,
                sim.grid.h,
                sim.grid.l,
                sim.grid.n_steps,
                sim.grid.time(sim.grid.n_steps),
                format!("{solver:?}").to_lowercase(),
                err.er(),
                err.rel(),
                sim.max_residual()
            );
            if !sim.cfl.ok {
                eprintln!(
                    "warning: J = {j}: 4σC_α = {:.3} >= 1, stability guard not met",
                    sim.cfl.value
                );
            }
            if let (Some(path), SolverKind::Sylvester) = (dat.or(cfg.out_dat.as_deref()), solver) {
                write_final_level(&sim, &suffixed(path, j))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_rows(rows: &[BenchRow]) {
    println!(
        "{:>4} {:>8} {:>8} {:>11} {:>11} {:>11} {:>11} {:>10} {:>10} {:>7} {:>7}",
        "J", "h", "l", "Er_II", "RelEr_II", "Er_I", "RelEr_I", "II (ms)", "I (ms)", "ratio", "order"
    );
    for r in rows {
        println!(
            "{:>4} {:>8.4} {:>8.4} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>10.2} {:>10.2} {:>7.2} {:>7.3}",
            r.j, r.h, r.l, r.er_ii, r.rel_ii, r.er_i, r.rel_i, r.time_ii_ms, r.time_i_ms, r.ratio, r.order_estimate
        );
    }
}

fn cmd_bench(config: &Path, out: Option<&Path>, repeats: usize) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let table = run_table1_with(&cfg, repeats.max(1))?;
    println!("forcing certificate: {:.3e}", table.forcing_certificate);
    print_rows(&table.rows);
    for (row, d) in table.rows.iter().zip(&table.diagnostics) {
        for f in &d.failures {
            eprintln!("J = {}: {f}", row.j);
        }
    }
    if let Some(path) = out.or(cfg.out_csv.as_deref()) {
        write_csv_file(&table.rows, path)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &cfg.out_dat {
        write_dat(&table.rows, fs::File::create(path)?)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_converge(config: &Path, js: Option<JList>, check: bool) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let js = js.map(|l| l.0).unwrap_or_else(|| cfg.js.clone());
    let report = run_convergence(&cfg, &js)?;
    println!("{:>4} {:>10} {:>12} {:>12}", "J", "h", "Er", "RelEr");
    for ((j, h), e) in report.js.iter().zip(&report.hs).zip(&report.errors) {
        println!("{j:>4} {h:>10.4} {:>12.4e} {:>12.4e}", e.er(), e.rel());
    }
    println!("order = {:.4}", report.order);
    println!("h-weighted order = {:.4}", report.scaled_order);
    if check && !(ORDER_WINDOW.0..=ORDER_WINDOW.1).contains(&report.order) {
        eprintln!(
            "order {:.4} outside [{}, {}]",
            report.order, ORDER_WINDOW.0, ORDER_WINDOW.1
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_series(lambda: f64, nu: f64, k: f64, n: usize, out: Option<&Path>) -> Result<ExitCode> {
    match out {
        Some(path) => {
            emit_series_table(lambda, nu, k, n, path)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", series_table(lambda, nu, k, n)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(config: &Path) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let report = validate(&cfg);
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        match &c.detail {
            Some(d) => println!("[{status}] {}: {d}", c.name),
            None => println!("[{status}] {}: {:.3e} (tol {:.1e})", c.name, c.value, c.tol),
        }
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { config, dat } => cmd_solve(&config, dat.as_deref()),
        Command::Bench { config, out, repeats } => cmd_bench(&config, out.as_deref(), repeats),
        Command::Converge { config, js, check } => cmd_converge(&config, js, check),
        Command::Series { lambda, nu, k, n, out } => cmd_series(lambda, nu, k, n, out.as_deref()),
        Command::Validate { config } => cmd_validate(&config),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
