//! Benchmark harness for the TV least-squares solvers: deterministic
//! instance generation and a self-describing instance file format
//! ([`instance`]), the experiment grid with per-cell averages
//! ([`grid`]), and CSV / aligned-text result tables ([`table`]).

use thiserror::Error;

use crate::opcore::OpError;
use crate::solvers::SolverError;

pub mod grid;
pub mod instance;
pub mod table;

pub use grid::{
    emit_norm_data, run_experiment, Algorithm, BenchOutcome, ExperimentGrid, KRule, RunOptions,
    Scale,
};
pub use instance::{
    generate_instance, load_instance, objective, parse_instance, save_instance, write_instance,
    Objective, ProblemInstance, FEASIBILITY_TOL,
};
pub use table::{emit_table, parse_table, save_table, TableFormat, TableRow};

/// Errors of the benchmark layer: file I/O, malformed text formats, and
/// failures bubbling up from the operator toolbox or the solvers.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
