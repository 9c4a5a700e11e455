//! Forward-partial-inverse-half-forward splitting: the subspace-aware
//! iteration this crate is named after.

use std::time::Instant;

use crate::opcore::{chi, CocoerciveMap, LipschitzMap, MaxMonotoneOracle, OpError, Vector};
use crate::solvers::{
    relative_change, SolveControl, SolverError, SolverReport, StepSchedule, Termination,
    TraceEvent, TraceFn,
};
use crate::subspace::{partial_inverse_resolvent, SubspaceProjector};

/// How far an initial point may sit from its prescribed subspace,
/// relative to `1 + ‖point‖`.
const MEMBERSHIP_TOL: f64 = 1e-8;

/// Inner inclusion solved once per iteration of [`fpihf_general_solve`]:
/// given the forward target `t_n = x_n + γ y_n − λ_n γ P_V (B + C) x_n`,
/// produce `(p, q)` with
///
/// * `p + γ q = t_n`, and
/// * `P_V q / λ_n + P_{V⊥} q ∈ A(P_V p + P_{V⊥} p / λ_n)`.
///
/// Only the first identity can be checked generically; the solver verifies
/// it to `1e-8 · (1 + ‖t_n‖)` and rejects the oracle otherwise. For
/// `λ_n ≡ 1` the closed form [`ResolventInner`] applies.
pub trait InnerInclusionOracle {
    fn solve(
        &self,
        a: &dyn MaxMonotoneOracle,
        v: &dyn SubspaceProjector,
        target: &Vector,
        gamma: f64,
        lambda: f64,
    ) -> Result<(Vector, Vector), OpError>;
}

/// Closed-form inner step for `λ ≡ 1`: `p = J_{γA}(t)`, `q = (t − p)/γ`,
/// which satisfies the inner inclusion because `q ∈ A p` by construction.
pub struct ResolventInner;

impl InnerInclusionOracle for ResolventInner {
    fn solve(
        &self,
        a: &dyn MaxMonotoneOracle,
        v: &dyn SubspaceProjector,
        target: &Vector,
        gamma: f64,
        lambda: f64,
    ) -> Result<(Vector, Vector), OpError> {
        if (lambda - 1.0).abs() > 1e-12 {
            return Err(OpError::Invalid(format!(
                "the closed-form inner step requires lambda = 1, got {lambda}"
            )));
        }
        let step = partial_inverse_resolvent(a, v, target, gamma)?;
        Ok((step.p, step.q))
    }
}

pub(super) fn validate_initial_points(
    v: &dyn SubspaceProjector,
    x0: Option<&Vector>,
    y0: Option<&Vector>,
) -> Result<(Vector, Vector), SolverError> {
    let dim = v.ambient_dim();
    let x = match x0 {
        Some(x) => {
            if x.len() != dim {
                return Err(SolverError::Config(format!(
                    "x0 has dimension {}, ambient space has {dim}",
                    x.len()
                )));
            }
            let drift = v.complement(x).norm();
            if drift > MEMBERSHIP_TOL * (1.0 + x.norm()) {
                return Err(SolverError::Config(format!(
                    "x0 is not in V: ‖P_V⊥ x0‖ = {drift:e}"
                )));
            }
            x.clone()
        }
        None => Vector::zeros(dim),
    };
    let y = match y0 {
        Some(y) => {
            if y.len() != dim {
                return Err(SolverError::Config(format!(
                    "y0 has dimension {}, ambient space has {dim}",
                    y.len()
                )));
            }
            let drift = v.project(y).norm();
            if drift > MEMBERSHIP_TOL * (1.0 + y.norm()) {
                return Err(SolverError::Config(format!(
                    "y0 is not in V⊥: ‖P_V y0‖ = {drift:e}"
                )));
            }
            y.clone()
        }
        None => Vector::zeros(dim),
    };
    Ok((x, y))
}

pub(super) fn gate_gamma(
    gamma: f64,
    ceiling: f64,
    beta: f64,
    lipschitz: f64,
    control: &SolveControl,
) -> Result<(), SolverError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(SolverError::Config(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    if gamma >= ceiling && !control.override_stepsize {
        return Err(SolverError::StepSize(format!(
            "gamma < chi violated: gamma = {gamma} >= chi = {ceiling} \
             (chi = 4*beta/(1 + sqrt(1 + 16*beta^2*L^2)) with beta = {beta}, L = {lipschitz})"
        )));
    }
    Ok(())
}

/// Solves `0 ∈ A x + B x + C x + N_V x` by the resolvent form of the
/// forward-partial-inverse-half-forward iteration (unit inner step):
///
/// ```text
/// p_n     = J_{γA}(x_n + γ y_n − γ P_V (B + C) x_n)
/// r_n     = P_V p_n
/// x_{n+1} = r_n + γ P_V (B x_n − B r_n)
/// y_{n+1} = y_n − (p_n − r_n)/γ
/// ```
///
/// `γ` must lie in `]0, χ[` with `χ = chi(β, L)`; the gate is refused by
/// name unless overridden. Initial points default to the origin and are
/// otherwise validated to lie in `V` (for `x0`) and `V⊥` (for `y0`).
///
/// The iteration keeps `x_n ∈ V` and `y_n ∈ V⊥` up to rounding, evaluates
/// `B` twice and `C` once per iteration, and applies three projections
/// onto `V`. Termination is on the relative change of `(x, y)`.
#[allow(clippy::too_many_arguments)]
pub fn fpihf_solve(
    a: &dyn MaxMonotoneOracle,
    b: &dyn LipschitzMap,
    c: &dyn CocoerciveMap,
    v: &dyn SubspaceProjector,
    gamma: f64,
    x0: Option<&Vector>,
    y0: Option<&Vector>,
    control: &SolveControl,
    mut trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let (beta, lipschitz) = (c.cocoercivity(), b.lipschitz());
    let ceiling = chi(beta, lipschitz)?;
    gate_gamma(gamma, ceiling, beta, lipschitz, control)?;
    let (mut x, mut y) = validate_initial_points(v, x0, y0)?;

    let started = Instant::now();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let termination = loop {
        let bx = b.apply(&x);
        let forward = v.project(&(&bx + c.apply(&x)));
        let p = match a.resolvent(&(&x + gamma * (&y - &forward)), gamma) {
            Ok(p) => p,
            Err(_) => break Termination::OracleError,
        };
        let r = v.project(&p);
        let x_next = &r + gamma * v.project(&(&bx - b.apply(&r)));
        let y_next = &y - (&p - &r) / gamma;

        iterations += 1;
        residual = relative_change(&[&x_next, &y_next], &[&x, &y]);
        if !residual.is_finite() {
            return Err(SolverError::Diverged { iteration: iterations });
        }
        if let Some(callback) = trace.as_deref_mut() {
            callback(TraceEvent {
                iteration: iterations,
                residual,
                objective: None,
                x: &x_next,
                y: Some(&y_next),
            });
        }
        x = x_next;
        y = y_next;
        if residual <= control.tol {
            break Termination::Converged;
        }
        if iterations >= control.cap {
            break Termination::IterationCap;
        }
    };

    Ok(SolverReport {
        iterations,
        wall_time_s: started.elapsed().as_secs_f64(),
        final_residual: residual,
        objective: None,
        termination,
        solution: x,
        dual: Some(y),
    })
}

/// The general form of the iteration, with per-iteration step sizes `λ_n`
/// and a caller-supplied oracle for the inner inclusion:
///
/// ```text
/// t_n     = x_n + γ y_n − λ_n γ P_V (B + C) x_n
/// (p, q)  = inner(t_n)         with p + γq = t_n and the scaled inclusion
/// x_{n+1} = P_V p + λ_n γ P_V (B x_n − B P_V p)
/// y_{n+1} = P_{V⊥} q
/// ```
///
/// The schedule is validated against the window `[ε, χ/γ − ε]`. With
/// `λ ≡ 1` and [`ResolventInner`] this coincides with [`fpihf_solve`].
#[allow(clippy::too_many_arguments)]
pub fn fpihf_general_solve(
    a: &dyn MaxMonotoneOracle,
    b: &dyn LipschitzMap,
    c: &dyn CocoerciveMap,
    v: &dyn SubspaceProjector,
    inner: &dyn InnerInclusionOracle,
    gamma: f64,
    schedule: &StepSchedule,
    x0: Option<&Vector>,
    y0: Option<&Vector>,
    control: &SolveControl,
    mut trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let (beta, lipschitz) = (c.cocoercivity(), b.lipschitz());
    let ceiling = chi(beta, lipschitz)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(SolverError::Config(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    if !control.override_stepsize {
        schedule.validate_window(ceiling / gamma, "chi/gamma")?;
    }
    let (mut x, mut y) = validate_initial_points(v, x0, y0)?;

    let started = Instant::now();
    let mut iterations = 0;
    let mut residual;
    let termination = loop {
        let lambda = schedule.lambda(iterations);
        let bx = b.apply(&x);
        let forward = v.project(&(&bx + c.apply(&x)));
        let target = &x + gamma * (&y - lambda * &forward);
        let (p, q) = match inner.solve(a, v, &target, gamma, lambda) {
            Ok(pair) => pair,
            Err(e) => {
                return Err(SolverError::InnerSolve {
                    iteration: iterations + 1,
                    message: e.to_string(),
                })
            }
        };
        let drift = (&p + gamma * &q - &target).norm();
        if drift > 1e-8 * (1.0 + target.norm()) {
            return Err(SolverError::InnerSolve {
                iteration: iterations + 1,
                message: format!("decomposition p + γq deviates from target by {drift:e}"),
            });
        }
        let pv = v.project(&p);
        let x_next = &pv + (lambda * gamma) * v.project(&(&bx - b.apply(&pv)));
        let y_next = v.complement(&q);

        iterations += 1;
        residual = relative_change(&[&x_next, &y_next], &[&x, &y]);
        if !residual.is_finite() {
            return Err(SolverError::Diverged { iteration: iterations });
        }
        if let Some(callback) = trace.as_deref_mut() {
            callback(TraceEvent {
                iteration: iterations,
                residual,
                objective: None,
                x: &x_next,
                y: Some(&y_next),
            });
        }
        x = x_next;
        y = y_next;
        if residual <= control.tol {
            break Termination::Converged;
        }
        if iterations >= control.cap {
            break Termination::IterationCap;
        }
    };

    Ok(SolverReport {
        iterations,
        wall_time_s: started.elapsed().as_secs_f64(),
        final_residual: residual,
        objective: None,
        termination,
        solution: x,
        dual: Some(y),
    })
}
