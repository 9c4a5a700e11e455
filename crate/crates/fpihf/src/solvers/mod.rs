//! Iterative solvers for monotone inclusions over subspaces, and the
//! shared plumbing they report through.
//!
//! All solvers follow the same conventions:
//!
//! * termination when the relative change of the listed state blocks
//!   ([`relative_change`]) drops to `tol`, or at the iteration cap;
//! * step-size preconditions are enforced up front and refused with an
//!   error naming the violated inequality, unless
//!   [`SolveControl::override_stepsize`] is set;
//! * an optional trace callback observes every iteration without being
//!   able to perturb it.

mod fbhf;
mod fpihf;
mod lstv;
mod primal_dual;

pub use fbhf::fbhf_solve;
pub use fpihf::{
    fpihf_general_solve, fpihf_solve, InnerInclusionOracle, ResolventInner,
};
pub use lstv::{lstv_chi, lstv_solve, tv_fixed_point_certificate};
pub use primal_dual::{
    composite_opt_solve, primal_dual_solve, CompositeBlock, DualBlock, StackedInclusion,
};

use thiserror::Error;

use crate::opcore::{OpError, Vector};

/// Errors that stop a solver before or during its iteration.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A structural precondition failed (dimensions, initial points, …).
    #[error("solver configuration: {0}")]
    Config(String),
    /// A step-size window was violated; the message names the inequality.
    #[error("step-size gate: {0}")]
    StepSize(String),
    /// The user-supplied inner inclusion oracle returned an inconsistent
    /// decomposition.
    #[error("inner solve at iteration {iteration}: {message}")]
    InnerSolve { iteration: usize, message: String },
    /// Iterates stopped being finite.
    #[error("divergence: non-finite iterate at iteration {iteration}")]
    Diverged { iteration: usize },
    /// An operator-level failure that is not tied to a running iteration.
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Why a solver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The residual dropped to the tolerance.
    Converged,
    /// The iteration cap was reached first.
    IterationCap,
    /// An oracle failed mid-iteration; the report carries the last good
    /// state.
    OracleError,
}

/// Tolerance, iteration budget and gate overrides shared by all solvers.
#[derive(Clone, Copy, Debug)]
pub struct SolveControl {
    /// Relative-change tolerance for termination.
    pub tol: f64,
    /// Hard iteration cap.
    pub cap: usize,
    /// Run even when a step size sits outside its guaranteed window.
    /// Convergence is then no longer covered by theory; refusals are the
    /// default for a reason.
    pub override_stepsize: bool,
}

impl Default for SolveControl {
    fn default() -> Self {
        Self { tol: 1e-6, cap: 50_000, override_stepsize: false }
    }
}

/// What a solver hands back: counters, the achieved residual, and the
/// final state.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub iterations: usize,
    pub wall_time_s: f64,
    pub final_residual: f64,
    /// Objective value at the solution, for solvers that know one.
    pub objective: Option<f64>,
    pub termination: Termination,
    /// Final primal iterate (for product-space solvers, the leading
    /// block).
    pub solution: Vector,
    /// Final dual iterate for solvers that carry one (e.g. the
    /// total-variation dual block).
    pub dual: Option<Vector>,
}

/// A view of one iteration, passed to trace callbacks. Holds references
/// into the solver's state, so observation cannot perturb the iterates.
pub struct TraceEvent<'a> {
    /// 1-based iteration counter.
    pub iteration: usize,
    /// Relative change produced by this iteration.
    pub residual: f64,
    /// Objective value, when the solver tracks one (computed only while
    /// tracing).
    pub objective: Option<f64>,
    /// State block constrained to `V` (concatenated when the solver keeps
    /// several).
    pub x: &'a Vector,
    /// Complementary block (in `V⊥`), when the iteration carries one.
    pub y: Option<&'a Vector>,
}

/// Trace callback type accepted by all solvers.
pub type TraceFn<'a> = dyn FnMut(TraceEvent<'_>) + 'a;

/// Relative change between two solver states split into blocks:
/// `‖current − previous‖ / max(1, ‖previous‖)` over the concatenation.
///
/// With `previous = 0` this is plainly `‖current‖`; a change of `1e-6` in
/// one coordinate against a state of norm 10 yields `1e-7`.
pub fn relative_change(current: &[&Vector], previous: &[&Vector]) -> f64 {
    debug_assert_eq!(current.len(), previous.len());
    let mut diff_sq = 0.0;
    let mut prev_sq = 0.0;
    for (cur, prev) in current.iter().zip(previous) {
        debug_assert_eq!(cur.len(), prev.len());
        for i in 0..cur.len() {
            let d = cur[i] - prev[i];
            diff_sq += d * d;
            prev_sq += prev[i] * prev[i];
        }
    }
    diff_sq.sqrt() / prev_sq.sqrt().max(1.0)
}

/// Step-size sequence `λ_n` together with the safety margin `ε` that the
/// convergence window is shrunk by.
///
/// A schedule is validated against a window ceiling `w` (which depends on
/// the solver: `χ` itself, or `χ/γ`): `ε` must lie in `]0, w/2[` and every
/// `λ_n` in `[ε, w − ε]`. Finite sequences repeat cyclically.
#[derive(Clone, Debug)]
pub struct StepSchedule {
    lambdas: Vec<f64>,
    epsilon: f64,
}

impl StepSchedule {
    /// Constant schedule `λ_n ≡ λ` with margin `ε`.
    pub fn constant(lambda: f64, epsilon: f64) -> Result<Self, SolverError> {
        Self::from_sequence(vec![lambda], epsilon)
    }

    /// Cyclic schedule from an explicit sequence with margin `ε`.
    pub fn from_sequence(lambdas: Vec<f64>, epsilon: f64) -> Result<Self, SolverError> {
        if lambdas.is_empty() {
            return Err(SolverError::Config("step schedule must not be empty".into()));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(SolverError::Config(format!(
                "step-schedule margin must be positive and finite, got {epsilon}"
            )));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(SolverError::Config(format!(
                "step sizes must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { lambdas, epsilon })
    }

    /// The step for iteration `n` (0-based), cycling through the sequence.
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambdas[n % self.lambdas.len()]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Checks `ε ∈ ]0, w/2[` and `λ_n ∈ [ε, w − ε]` for the window ceiling
    /// `w`, naming the violated inequality otherwise.
    pub fn validate_window(&self, ceiling: f64, ceiling_name: &str) -> Result<(), SolverError> {
        if !(self.epsilon < 0.5 * ceiling) {
            return Err(SolverError::StepSize(format!(
                "epsilon < {ceiling_name}/2 violated: {} >= {}",
                self.epsilon,
                0.5 * ceiling
            )));
        }
        for (i, &l) in self.lambdas.iter().enumerate() {
            if l < self.epsilon {
                return Err(SolverError::StepSize(format!(
                    "lambda_n >= epsilon violated at position {i}: {l} < {}",
                    self.epsilon
                )));
            }
            if l > ceiling - self.epsilon {
                return Err(SolverError::StepSize(format!(
                    "lambda_n <= {ceiling_name} - epsilon violated at position {i}: {l} > {}",
                    ceiling - self.epsilon
                )));
            }
        }
        Ok(())
    }
}
