//! Forward-backward-half-forward splitting on the whole space: the
//! three-operator method the subspace iteration reduces to when `V = ℝⁿ`.

use std::time::Instant;

use crate::opcore::{chi, CocoerciveMap, LipschitzMap, MaxMonotoneOracle, Vector};
use crate::solvers::{
    relative_change, SolveControl, SolverError, SolverReport, StepSchedule, Termination,
    TraceEvent, TraceFn,
};

/// Solves `0 ∈ A z + B z + C z` for maximally monotone `A`, monotone
/// `L`-Lipschitz `B` and `β`-cocoercive `C` by the iteration
///
/// ```text
/// s_n     = J_{λ_n A}(z_n − λ_n (B + C) z_n)
/// z_{n+1} = s_n + λ_n (B z_n − B s_n)
/// ```
///
/// with `λ_n` supplied by `schedule` and validated against the window
/// `[ε, χ̂ − ε]`, `χ̂ = chi(β, L)`, unless
/// [`SolveControl::override_stepsize`] is set. `B` is evaluated twice per
/// iteration and `C` once.
pub fn fbhf_solve(
    a: &dyn MaxMonotoneOracle,
    b: &dyn LipschitzMap,
    c: &dyn CocoerciveMap,
    z0: &Vector,
    schedule: &StepSchedule,
    control: &SolveControl,
    mut trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let ceiling = chi(c.cocoercivity(), b.lipschitz())?;
    if !control.override_stepsize {
        schedule.validate_window(ceiling, "chi")?;
    }

    let started = Instant::now();
    let mut z = z0.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let termination = loop {
        let lambda = schedule.lambda(iterations);
        let bz = b.apply(&z);
        let forward = &bz + c.apply(&z);
        let s = match a.resolvent(&(&z - lambda * &forward), lambda) {
            Ok(s) => s,
            Err(_) => break Termination::OracleError,
        };
        let z_next = &s + lambda * (&bz - b.apply(&s));

        iterations += 1;
        residual = relative_change(&[&z_next], &[&z]);
        if !residual.is_finite() {
            return Err(SolverError::Diverged { iteration: iterations });
        }
        if let Some(callback) = trace.as_deref_mut() {
            callback(TraceEvent {
                iteration: iterations,
                residual,
                objective: None,
                x: &z_next,
                y: None,
            });
        }
        z = z_next;
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
        solution: z,
        dual: None,
    })
}
