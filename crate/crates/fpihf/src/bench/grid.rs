//! Experiment grid: which instances to solve, with which algorithms, and
//! the per-cell averaging that turns solver reports into table rows.
//!
//! A *cell* is one `(kappa, n, k_rule, algorithm)` combination; its
//! replications share seeds `base_seed + rep` across all cells, so
//! instances at different `kappa` but the same seed use the same
//! underlying uniform draw and differ only by the scale factor. Cells may
//! run on several threads; replications inside a cell stay sequential so
//! their timings are not polluted by siblings, and results are assembled
//! in grid order regardless of scheduling.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::baselines::{condat_vu_solve, fpif_solve, fpif_window};
use crate::bench::table::TableRow;
use crate::bench::{generate_instance, BenchError};
use crate::opcore::operator_norm;
use crate::solvers::{lstv_chi, lstv_solve, SolveControl, SolverReport, Termination};

/// How the row count `k` of the data matrix is derived from `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KRule {
    NOver3,
    NOver2,
    TwoNOver3,
}

impl KRule {
    pub const ALL: [KRule; 3] = [KRule::NOver3, KRule::NOver2, KRule::TwoNOver3];

    pub fn apply(&self, n: usize) -> usize {
        match self {
            KRule::NOver3 => n / 3,
            KRule::NOver2 => n / 2,
            KRule::TwoNOver3 => 2 * n / 3,
        }
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KRule::NOver3 => "N/3",
            KRule::NOver2 => "N/2",
            KRule::TwoNOver3 => "2N/3",
        })
    }
}

impl FromStr for KRule {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "N/3" => Ok(KRule::NOver3),
            "N/2" => Ok(KRule::NOver2),
            "2N/3" => Ok(KRule::TwoNOver3),
            other => Err(BenchError::Format(format!(
                "unknown k rule {other:?}, expected one of N/3, N/2, 2N/3"
            ))),
        }
    }
}

/// The solvers the benchmark can dispatch to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// [`lstv_solve`]: subspace iteration with the least-squares term in
    /// the cocoercive slot.
    Fpihf,
    /// [`fpif_solve`]: same subspace, least-squares term merged into the
    /// Lipschitz map.
    Fpif,
    /// [`condat_vu_solve`]: primal–dual baseline.
    CondatVu,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Fpihf, Algorithm::Fpif, Algorithm::CondatVu];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fpihf => "fpihf",
            Algorithm::Fpif => "fpif",
            Algorithm::CondatVu => "condat-vu",
        })
    }
}

impl FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fpihf" => Ok(Algorithm::Fpihf),
            "fpif" => Ok(Algorithm::Fpif),
            "condat-vu" | "condatvu" | "cv" => Ok(Algorithm::CondatVu),
            other => Err(BenchError::Format(format!(
                "unknown algorithm {other:?}, expected one of fpihf, fpif, condat-vu"
            ))),
        }
    }
}

/// Rational shrink factor applied to the base problem sizes, e.g. `1/10`
/// turns the full-size grid `{600, 1200, 2400}` into `{60, 120, 240}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scale {
    pub num: u32,
    pub den: u32,
}

impl Scale {
    pub const FULL: Scale = Scale { num: 1, den: 1 };

    pub fn is_full(&self) -> bool {
        self.num == self.den
    }

    /// `n * num / den`, truncated.
    pub fn apply(&self, n: usize) -> usize {
        n * self.num as usize / self.den as usize
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Scale {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |s: &str| {
            BenchError::Format(format!(
                "scale must be a positive fraction like 1/10 or 1, got {s:?}"
            ))
        };
        let (num, den) = match s.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<u32>().map_err(|_| bad(s))?,
                b.trim().parse::<u32>().map_err(|_| bad(s))?,
            ),
            None => (s.trim().parse::<u32>().map_err(|_| bad(s))?, 1),
        };
        if num == 0 || den == 0 {
            return Err(bad(s));
        }
        Ok(Scale { num, den })
    }
}

/// The full cross product of instance parameters the benchmark sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentGrid {
    pub kappas: Vec<f64>,
    /// Full-size dimensions; [`Scale`] shrinks them at run time.
    pub base_ns: Vec<usize>,
    pub k_rules: Vec<KRule>,
    pub replications: usize,
    pub scale: Scale,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Replication `rep` of every cell uses seed `base_seed + rep`.
    pub base_seed: u64,
}

impl ExperimentGrid {
    /// The full-size sweep: `kappa ∈ {1/5, 1/10, 1/20, 1/30}`,
    /// `n ∈ {600, 1200, 2400}`, all three `k` rules, 20 replications,
    /// `alpha1 = 5`, `alpha2 = 0.5`.
    pub fn full() -> Self {
        Self {
            kappas: vec![1.0 / 5.0, 1.0 / 10.0, 1.0 / 20.0, 1.0 / 30.0],
            base_ns: vec![600, 1200, 2400],
            k_rules: KRule::ALL.to_vec(),
            replications: 20,
            scale: Scale::FULL,
            alpha1: 5.0,
            alpha2: 0.5,
            base_seed: 0,
        }
    }

    /// The same sweep shrunk 10× (`n ∈ {60, 120, 240}`) with 5
    /// replications — minutes instead of hours.
    pub fn desk() -> Self {
        Self { replications: 5, scale: Scale { num: 1, den: 10 }, ..Self::full() }
    }

    pub fn effective_ns(&self) -> Vec<usize> {
        self.base_ns.iter().map(|&n| self.scale.apply(n)).collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.kappas.is_empty() || self.base_ns.is_empty() || self.k_rules.is_empty() {
            return Err(BenchError::Format(
                "grid needs at least one kappa, one n, and one k rule".into(),
            ));
        }
        for &kappa in &self.kappas {
            if !(kappa > 0.0) || !kappa.is_finite() {
                return Err(BenchError::Format(format!(
                    "kappa must be positive and finite, got {kappa}"
                )));
            }
        }
        if self.replications == 0 {
            return Err(BenchError::Format("replications must be at least 1".into()));
        }
        for &base in &self.base_ns {
            let n = self.scale.apply(base);
            if n < 2 {
                return Err(BenchError::Format(format!(
                    "scaled size {n} (from {base} at scale {}) is below the minimum 2",
                    self.scale
                )));
            }
        }
        if !(self.alpha1 > 0.0) || !self.alpha1.is_finite() {
            return Err(BenchError::Format(format!(
                "alpha1 must be positive and finite, got {}",
                self.alpha1
            )));
        }
        if !(self.alpha2 >= 0.0) || !self.alpha2.is_finite() {
            return Err(BenchError::Format(format!(
                "alpha2 must be nonnegative and finite, got {}",
                self.alpha2
            )));
        }
        Ok(())
    }
}

/// Knobs of [`run_experiment`] that are not part of the grid itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub cap: usize,
    /// Overrides the default step `0.99 ×` ceiling for the subspace
    /// solvers; the primal–dual baseline always self-configures.
    pub gamma: Option<f64>,
    pub override_stepsize: bool,
    /// Worker threads for cells; `1` keeps everything sequential,
    /// which is what timing runs should use.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { tol: 1e-6, cap: 50_000, gamma: None, override_stepsize: false, threads: 1 }
    }
}

/// Result of a grid run: one row per cell that completed, plus the
/// configuration errors of cells that could not run at all.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutcome {
    pub rows: Vec<TableRow>,
    pub cell_errors: Vec<String>,
}

fn run_cell(
    grid: &ExperimentGrid,
    options: &RunOptions,
    kappa: f64,
    n: usize,
    k_rule: KRule,
    algorithm: Algorithm,
) -> Result<TableRow, String> {
    let k = k_rule.apply(n);
    let context = |err: &dyn fmt::Display| {
        format!("kappa={kappa} n={n} k_rule={k_rule} algorithm={algorithm}: {err}")
    };
    let control = SolveControl {
        tol: options.tol,
        cap: options.cap,
        override_stepsize: options.override_stepsize,
    };
    let mut total_time = 0.0;
    let mut total_iters = 0usize;
    let mut timeouts = 0usize;
    for rep in 0..grid.replications {
        let seed = grid.base_seed + rep as u64;
        let instance = generate_instance(n, k, kappa, grid.alpha1, grid.alpha2, seed)
            .map_err(|e| context(&e))?;
        let report: SolverReport = match algorithm {
            Algorithm::Fpihf => {
                let ceiling = lstv_chi(grid.alpha1).map_err(|e| context(&e))?;
                let gamma = options.gamma.unwrap_or(0.99 * ceiling);
                lstv_solve(&instance, gamma, &control, None)
            }
            Algorithm::Fpif => {
                let window = fpif_window(grid.alpha1).map_err(|e| context(&e))?;
                let gamma = options.gamma.unwrap_or(0.99 * window);
                fpif_solve(&instance, gamma, &control, None)
            }
            Algorithm::CondatVu => condat_vu_solve(&instance, None, &control, None),
        }
        .map_err(|e| format!("{} (seed {seed})", context(&e)))?;
        total_time += report.wall_time_s;
        total_iters += report.iterations;
        match report.termination {
            Termination::IterationCap => timeouts += 1,
            Termination::OracleError => {
                return Err(format!("{} (seed {seed})", context(&"solver oracle failed")));
            }
            Termination::Converged => {}
        }
    }
    // Averages cover every replication, capped ones included; only a cell
    // where *all* replications hit the cap is reported without averages.
    let reps = grid.replications as f64;
    let all_capped = timeouts == grid.replications;
    Ok(TableRow {
        kappa,
        n,
        k_rule,
        algorithm,
        avg_time_s: (!all_capped).then(|| total_time / reps),
        avg_iters: (!all_capped).then(|| total_iters as f64 / reps),
        timeouts,
    })
}

/// Runs every grid cell for every requested algorithm and averages the
/// replications. Rows come back in grid order (kappa, n, k rule,
/// algorithm) no matter how many threads run cells; iteration counts are
/// a pure function of the grid and options, only the time column varies
/// between runs.
pub fn run_experiment(
    grid: &ExperimentGrid,
    algorithms: &[Algorithm],
    options: &RunOptions,
) -> Result<BenchOutcome, BenchError> {
    grid.validate()?;
    if algorithms.is_empty() {
        return Err(BenchError::Format("no algorithms selected".into()));
    }
    if options.threads == 0 {
        return Err(BenchError::Format("thread count must be at least 1".into()));
    }
    if !(options.tol >= 0.0) || !options.tol.is_finite() {
        return Err(BenchError::Format(format!(
            "tolerance must be nonnegative and finite, got {}",
            options.tol
        )));
    }
    if options.cap == 0 {
        return Err(BenchError::Format("iteration cap must be at least 1".into()));
    }

    let mut cells = Vec::new();
    for &kappa in &grid.kappas {
        for n in grid.effective_ns() {
            for &k_rule in &grid.k_rules {
                for &algorithm in algorithms {
                    cells.push((kappa, n, k_rule, algorithm));
                }
            }
        }
    }

    let slots: Mutex<Vec<Option<Result<TableRow, String>>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let workers = options.threads.min(cells.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= cells.len() {
                    break;
                }
                let (kappa, n, k_rule, algorithm) = cells[index];
                let outcome = run_cell(grid, options, kappa, n, k_rule, algorithm);
                slots.lock().unwrap()[index] = Some(outcome);
            });
        }
    });

    let mut rows = Vec::new();
    let mut cell_errors = Vec::new();
    for slot in slots.into_inner().unwrap() {
        match slot.expect("every cell was scheduled") {
            Ok(row) => rows.push(row),
            Err(message) => cell_errors.push(message),
        }
    }
    Ok(BenchOutcome { rows, cell_errors })
}

/// CSV of `kappa, n, seed, norm_a` across the grid's kappas, sizes, and
/// seeds, enough to draw the matrix-norm box plots externally. Each norm
/// is a power-iteration estimate on the instance with `k = n/2`; seeds
/// are shared across kappas, so per seed the norm is exactly linear in
/// kappa.
pub fn emit_norm_data(grid: &ExperimentGrid) -> Result<String, BenchError> {
    grid.validate()?;
    let mut out = String::from("kappa,n,seed,norm_a\n");
    for &kappa in &grid.kappas {
        for n in grid.effective_ns() {
            let k = KRule::NOver2.apply(n);
            for rep in 0..grid.replications {
                let seed = grid.base_seed + rep as u64;
                let instance = generate_instance(n, k, kappa, grid.alpha1, grid.alpha2, seed)?;
                let estimate = operator_norm(&instance.a, 1e-8, 10_000);
                out.push_str(&format!("{kappa},{n},{seed},{}\n", estimate.value));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for rule in KRule::ALL {
            assert_eq!(rule.to_string().parse::<KRule>().unwrap(), rule);
        }
        assert_eq!("n/2".parse::<KRule>().unwrap(), KRule::NOver2);
        assert!("N/4".parse::<KRule>().is_err());

        for algorithm in Algorithm::ALL {
            assert_eq!(algorithm.to_string().parse::<Algorithm>().unwrap(), algorithm);
        }
        assert_eq!("cv".parse::<Algorithm>().unwrap(), Algorithm::CondatVu);
        assert_eq!("FPIHF".parse::<Algorithm>().unwrap(), Algorithm::Fpihf);
        assert!("newton".parse::<Algorithm>().is_err());

        assert_eq!("1/10".parse::<Scale>().unwrap(), Scale { num: 1, den: 10 });
        assert_eq!("1".parse::<Scale>().unwrap(), Scale::FULL);
        assert_eq!(Scale { num: 2, den: 3 }.to_string(), "2/3");
        assert!("0/10".parse::<Scale>().is_err());
        assert!("a/b".parse::<Scale>().is_err());
    }

    #[test]
    fn scale_applies_to_base_sizes() {
        assert_eq!(ExperimentGrid::desk().effective_ns(), vec![60, 120, 240]);
        assert_eq!(ExperimentGrid::full().effective_ns(), vec![600, 1200, 2400]);
        assert_eq!(Scale { num: 2, den: 3 }.apply(600), 400);
        assert_eq!(KRule::NOver3.apply(60), 20);
        assert_eq!(KRule::NOver2.apply(60), 30);
        assert_eq!(KRule::TwoNOver3.apply(60), 40);

        let mut tiny = ExperimentGrid::desk();
        tiny.base_ns = vec![10];
        assert!(tiny.validate().is_err());
    }

    #[test]
    fn single_cell_rows_are_deterministic_across_thread_counts() {
        let grid = ExperimentGrid {
            kappas: vec![0.2],
            base_ns: vec![600],
            k_rules: vec![KRule::NOver2],
            replications: 2,
            ..ExperimentGrid::desk()
        };
        let algorithms = [Algorithm::Fpihf, Algorithm::CondatVu];
        let parallel = run_experiment(
            &grid,
            &algorithms,
            &RunOptions { threads: 2, ..RunOptions::default() },
        )
        .unwrap();
        assert!(parallel.cell_errors.is_empty());
        assert_eq!(parallel.rows.len(), 2);
        for row in &parallel.rows {
            assert_eq!(row.timeouts, 0);
            assert!(row.avg_iters.unwrap() >= 1.0);
            assert!(row.avg_time_s.unwrap() > 0.0);
        }
        assert_eq!(parallel.rows[0].algorithm, Algorithm::Fpihf);
        assert_eq!(parallel.rows[1].algorithm, Algorithm::CondatVu);

        let sequential = run_experiment(&grid, &algorithms, &RunOptions::default()).unwrap();
        for (a, b) in parallel.rows.iter().zip(&sequential.rows) {
            assert_eq!(a.kappa, b.kappa);
            assert_eq!(a.n, b.n);
            assert_eq!(a.k_rule, b.k_rule);
            assert_eq!(a.algorithm, b.algorithm);
            assert_eq!(a.avg_iters, b.avg_iters);
            assert_eq!(a.timeouts, b.timeouts);
        }
    }

    #[test]
    fn fully_capped_cells_lose_their_averages() {
        let grid = ExperimentGrid {
            kappas: vec![0.2],
            base_ns: vec![600],
            k_rules: vec![KRule::NOver3],
            replications: 2,
            ..ExperimentGrid::desk()
        };
        let outcome = run_experiment(
            &grid,
            &[Algorithm::Fpihf],
            &RunOptions { tol: 1e-16, cap: 5, ..RunOptions::default() },
        )
        .unwrap();
        let row = &outcome.rows[0];
        assert_eq!(row.timeouts, 2);
        assert_eq!(row.avg_time_s, None);
        assert_eq!(row.avg_iters, None);
    }

    #[test]
    fn cell_configuration_errors_are_collected_not_fatal() {
        let grid = ExperimentGrid {
            kappas: vec![0.2],
            base_ns: vec![600],
            k_rules: vec![KRule::NOver2],
            replications: 1,
            ..ExperimentGrid::desk()
        };
        let outcome = run_experiment(
            &grid,
            &[Algorithm::Fpihf],
            &RunOptions { gamma: Some(0.5), cap: 10, ..RunOptions::default() },
        )
        .unwrap();
        assert!(outcome.rows.is_empty());
        assert_eq!(outcome.cell_errors.len(), 1);
        assert!(outcome.cell_errors[0].contains("gamma < chi"), "{}", outcome.cell_errors[0]);

        assert!(run_experiment(&grid, &[], &RunOptions::default()).is_err());
        let empty = ExperimentGrid { kappas: vec![], ..grid };
        assert!(run_experiment(&empty, &[Algorithm::Fpihf], &RunOptions::default()).is_err());
    }

    #[test]
    fn norm_data_is_exactly_linear_in_kappa_per_seed() {
        let grid = ExperimentGrid {
            kappas: vec![0.1, 0.05],
            base_ns: vec![600],
            k_rules: vec![KRule::NOver2],
            replications: 5,
            ..ExperimentGrid::desk()
        };
        let csv = emit_norm_data(&grid).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "kappa,n,seed,norm_a");
        assert_eq!(lines.len(), 1 + 2 * 5);
        let parse = |line: &str| {
            let fields: Vec<&str> = line.split(',').collect();
            (fields[2].parse::<u64>().unwrap(), fields[3].parse::<f64>().unwrap())
        };
        for i in 0..5 {
            let (seed_big, norm_big) = parse(lines[1 + i]);
            let (seed_small, norm_small) = parse(lines[6 + i]);
            assert_eq!(seed_big, seed_small);
            assert!(norm_big > 0.0);
            // Same seed, doubled kappa: the matrices are exact 2× copies,
            // so the power-iteration estimates double bit-for-bit.
            assert_eq!(norm_big, 2.0 * norm_small);
        }
    }
}
