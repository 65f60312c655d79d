//! Benchmark harness: configuration files, the accuracy/timing table,
//! refinement studies, coefficient tables and self-checks.

use thiserror::Error;

use crate::exact::ExactError;
use crate::grid::GridError;
use crate::stepper::{OrderError, StepperError};

pub mod config;
pub mod series;
pub mod table;
pub mod validate;

pub use config::{parse_config, parse_j_list, RunConfig, SeedMode, SolverChoice, DESK_JS};
pub use series::{emit_series_table, series_table};
pub use table::{
    convergence_study, read_csv, run_convergence, run_table1, run_table1_with, write_csv, write_csv_file, write_dat,
    BenchRow, ConvergenceReport, RowDiagnostics, Table1,
};
pub use validate::{validate, Check, ValidationReport};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config is missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("forcing certificate {residual:.3e} exceeds {tol:.1e}")]
    ForcingCertificate { residual: f64, tol: f64 },
    #[error("a convergence study needs at least 3 resolutions, got {0}")]
    TooFewLevels(usize),
    #[error(transparent)]
    Order(#[from] OrderError),
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Csv(e.to_string())
    }
}
