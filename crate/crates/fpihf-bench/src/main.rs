//! Command-line driver for the TV least-squares benchmark: solve a single
//! instance file, sweep the benchmark grid into a results table, or dump
//! matrix-norm data for the instance generator.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fpihf::baselines::{condat_vu_solve, fpif_solve, fpif_window};
use fpihf::bench::{
    emit_norm_data, emit_table, load_instance, run_experiment, save_table, Algorithm,
    ExperimentGrid, KRule, RunOptions, Scale, TableFormat,
};
use fpihf::solvers::{lstv_chi, lstv_solve, SolveControl, SolverReport, Termination};

/// Number of worker threads for grid cells; unset means fully sequential,
/// which is what timing runs should use.
const THREADS_VAR: &str = "FPIHF_BENCH_THREADS";

#[derive(Parser)]
#[command(
    name = "fpihf-bench",
    about = "Benchmark driver for box-constrained TV least-squares solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and report the outcome.
    Solve(SolveArgs),
    /// Run the experiment grid and emit a results table.
    Bench(BenchArgs),
    /// Emit per-seed matrix-norm data across the grid (CSV).
    Norms(NormsArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file, either with explicit data blocks or a seeded recipe.
    instance: PathBuf,
    /// Algorithm: fpihf, fpif, or condat-vu.
    #[arg(long, default_value = "fpihf", value_parser = parse_algorithm)]
    algo: Algorithm,
    /// Step size for the subspace algorithms; defaults to 0.99 times the
    /// algorithm's ceiling. condat-vu configures its own steps.
    #[arg(long)]
    gamma: Option<f64>,
    /// Relative-change tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 50_000)]
    cap: usize,
    /// Run even if the step size violates the convergence window.
    #[arg(long)]
    override_stepsize: bool,
    /// Write the solution vector here, one entry per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Matrix entry scale kappa (entries of A are uniform in [0, kappa]);
    /// repeatable. Default: 1/5, 1/10, 1/20, 1/30.
    #[arg(long = "kappa", value_name = "KAPPA")]
    kappas: Vec<f64>,
    /// Full-size dimension n; repeatable, shrunk by --scale.
    /// Default: 600, 1200, 2400.
    #[arg(long = "n", value_name = "N")]
    ns: Vec<usize>,
    /// Rule deriving the row count k from n: N/3, N/2, or 2N/3;
    /// repeatable. Default: all three.
    #[arg(long = "k-rule", value_name = "RULE", value_parser = parse_k_rule)]
    k_rules: Vec<KRule>,
    /// Algorithm to benchmark; repeatable. Default: all three.
    #[arg(long = "algo", value_name = "ALGO", value_parser = parse_algorithm)]
    algos: Vec<Algorithm>,
    /// Relative-change tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration cap; a replication that hits it counts as a timeout.
    #[arg(long, default_value_t = 50_000)]
    cap: usize,
    /// Step-size override for the subspace algorithms.
    #[arg(long)]
    gamma: Option<f64>,
    /// Run even if the step size violates the convergence window.
    #[arg(long)]
    override_stepsize: bool,
    /// Base seed; replication r of every cell uses seed base+r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shrink factor for the dimensions, e.g. 1/10; 1 runs full size.
    #[arg(long, default_value = "1/10", value_parser = parse_scale)]
    scale: Scale,
    /// Replications per cell. Default: 5, or 20 at full scale.
    #[arg(long)]
    reps: Option<usize>,
    /// Output path; omitted means stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format: csv or text.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: TableFormat,
}

#[derive(Args)]
struct NormsArgs {
    /// Matrix entry scale kappa; repeatable. Default: 1/5, 1/10, 1/20, 1/30.
    #[arg(long = "kappa", value_name = "KAPPA")]
    kappas: Vec<f64>,
    /// Full-size dimension n; repeatable, shrunk by --scale.
    #[arg(long = "n", value_name = "N")]
    ns: Vec<usize>,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shrink factor for the dimensions.
    #[arg(long, default_value = "1/10", value_parser = parse_scale)]
    scale: Scale,
    /// Seeds per (kappa, n) pair. Default: 5, or 20 at full scale.
    #[arg(long)]
    reps: Option<usize>,
    /// Output path; omitted means stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: fpihf::bench::BenchError| e.to_string())
}

fn parse_k_rule(s: &str) -> Result<KRule, String> {
    s.parse().map_err(|e: fpihf::bench::BenchError| e.to_string())
}

fn parse_scale(s: &str) -> Result<Scale, String> {
    s.parse().map_err(|e: fpihf::bench::BenchError| e.to_string())
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: fpihf::bench::BenchError| e.to_string())
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{{\"error\": \"{}\"}}", escape_json(&format!("{err:#}")));
            std::process::ExitCode::FAILURE
        }
    }
}

fn escape_json(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Norms(args) => cmd_norms(args),
    }
}

fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(value) => {
            let count: usize = value
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_VAR} must be a positive integer, got {value:?}"))?;
            if count == 0 {
                bail!("{THREADS_VAR} must be at least 1");
            }
            Ok(count)
        }
        Err(std::env::VarError::NotPresent) => Ok(1),
        Err(e) => Err(e).context(format!("reading {THREADS_VAR}")),
    }
}

fn termination_name(termination: &Termination) -> &'static str {
    match termination {
        Termination::Converged => "converged",
        Termination::IterationCap => "iteration-cap",
        Termination::OracleError => "oracle-error",
    }
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let instance = load_instance(&args.instance)
        .with_context(|| format!("loading {}", args.instance.display()))?;
    let control = SolveControl {
        tol: args.tol,
        cap: args.cap,
        override_stepsize: args.override_stepsize,
    };
    let report: SolverReport = match args.algo {
        Algorithm::Fpihf => {
            let gamma = match args.gamma {
                Some(g) => g,
                None => 0.99 * lstv_chi(instance.alpha1)?,
            };
            lstv_solve(&instance, gamma, &control, None)?
        }
        Algorithm::Fpif => {
            let gamma = match args.gamma {
                Some(g) => g,
                None => 0.99 * fpif_window(instance.alpha1)?,
            };
            fpif_solve(&instance, gamma, &control, None)?
        }
        Algorithm::CondatVu => {
            if args.gamma.is_some() {
                bail!("--gamma does not apply to condat-vu, which derives tau/sigma/rho itself");
            }
            condat_vu_solve(&instance, None, &control, None)?
        }
    };
    println!("algorithm: {}", args.algo);
    println!("n: {}", instance.n());
    println!("k: {}", instance.k());
    println!("termination: {}", termination_name(&report.termination));
    println!("iterations: {}", report.iterations);
    println!("wall_time_s: {}", report.wall_time_s);
    println!("final_residual: {:e}", report.final_residual);
    if let Some(objective) = report.objective {
        println!("objective: {objective}");
    }
    if let Some(path) = args.out {
        let mut text = String::new();
        for value in report.solution.iter() {
            text.push_str(&value.to_string());
            text.push('\n');
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("solution: {}", path.display());
    }
    Ok(())
}

fn build_grid(
    kappas: Vec<f64>,
    ns: Vec<usize>,
    k_rules: Vec<KRule>,
    seed: u64,
    scale: Scale,
    reps: Option<usize>,
) -> ExperimentGrid {
    let mut grid = ExperimentGrid::full();
    if !kappas.is_empty() {
        grid.kappas = kappas;
    }
    if !ns.is_empty() {
        grid.base_ns = ns;
    }
    if !k_rules.is_empty() {
        grid.k_rules = k_rules;
    }
    grid.scale = scale;
    grid.replications = reps.unwrap_or(if scale.is_full() { 20 } else { 5 });
    grid.base_seed = seed;
    grid
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let grid = build_grid(args.kappas, args.ns, args.k_rules, args.seed, args.scale, args.reps);
    if grid.scale.is_full() {
        eprintln!(
            "warning: full-scale run (n up to {}, {} replications per cell); expect hours",
            grid.base_ns.iter().max().copied().unwrap_or(0),
            grid.replications
        );
    }
    let algorithms = if args.algos.is_empty() { Algorithm::ALL.to_vec() } else { args.algos };
    let options = RunOptions {
        tol: args.tol,
        cap: args.cap,
        gamma: args.gamma,
        override_stepsize: args.override_stepsize,
        threads: thread_count()?,
    };
    let outcome = run_experiment(&grid, &algorithms, &options)?;
    for error in &outcome.cell_errors {
        eprintln!("cell error: {error}");
    }
    if outcome.rows.is_empty() {
        bail!("no cell produced a result ({} cell errors)", outcome.cell_errors.len());
    }
    match args.out {
        Some(path) => {
            save_table(&outcome.rows, args.format, &path)?;
            eprintln!("wrote {} rows to {}", outcome.rows.len(), path.display());
        }
        None => print!("{}", emit_table(&outcome.rows, args.format)?),
    }
    Ok(())
}

fn cmd_norms(args: NormsArgs) -> Result<()> {
    let grid = build_grid(args.kappas, args.ns, Vec::new(), args.seed, args.scale, args.reps);
    let csv = emit_norm_data(&grid)?;
    match args.out {
        Some(path) => {
            std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}
