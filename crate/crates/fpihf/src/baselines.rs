//! Reference solvers the benchmark compares against: a primal–dual
//! proximal-splitting method that activates the least-squares term through
//! its gradient ([`condat_vu_solve`]), and the subspace iteration with the
//! least-squares term folded into the Lipschitz part instead of the
//! cocoercive slot ([`fpif_solve`]). Both solve the same box-constrained
//! TV least-squares instances as
//! [`lstv_solve`](crate::solvers::lstv_solve).

use std::time::Instant;

use crate::bench::{objective, ProblemInstance};
use crate::opcore::{
    discrete_gradient, discrete_gradient_adjoint, operator_norm, project_box, prox_conjugate,
    prox_l1, LipschitzMap, MaxMonotoneOracle, OpError, SoftThreshold, Vector, ZeroOperator,
};
use crate::solvers::{
    fpihf_solve, relative_change, SolveControl, SolverError, SolverReport, Termination,
    TraceEvent, TraceFn,
};
use crate::subspace::{KernelFactorization, LeadingBlockProjector};

/// Upper bound on the operator norm of the forward-difference gradient,
/// valid in every dimension.
pub const GRAD_NORM_BOUND: f64 = 2.0;

/// Relative tolerance of the power iteration estimating `‖A‖` inside the
/// solvers.
const NORM_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Primal–dual baseline
// ---------------------------------------------------------------------------

/// Step sizes of [`condat_vu_solve`]: primal step `tau`, dual step
/// `sigma`, relaxation `rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondatVuConfig {
    pub tau: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl CondatVuConfig {
    /// Relaxation ceiling `delta = 2 - alpha1*normA^2 / (2*(1/tau -
    /// sigma*normL^2))`; the limit value `2` when the smooth term vanishes.
    pub fn delta(&self, alpha1: f64, norm_a: f64, norm_l: f64) -> f64 {
        let quad = alpha1 * norm_a * norm_a;
        if quad == 0.0 {
            2.0
        } else {
            2.0 - quad / (2.0 * (1.0 / self.tau - self.sigma * norm_l * norm_l))
        }
    }

    /// Checks the convergence conditions for the given problem constants,
    /// naming the violated inequality in the error. Equality in the step
    /// inequality is admitted up to a roundoff slack so that
    /// configurations built by [`condat_vu_autoconfig`] (which saturate
    /// it) always pass.
    pub fn validate(&self, alpha1: f64, norm_a: f64, norm_l: f64) -> Result<(), SolverError> {
        for (name, value) in [("tau", self.tau), ("sigma", self.sigma), ("rho", self.rho)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SolverError::Config(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        let lhs = self.sigma * norm_l * norm_l;
        let rhs = 1.0 / self.tau - alpha1 * norm_a * norm_a / 2.0;
        if lhs > rhs + 1e-12 * (1.0 + rhs.abs()) {
            return Err(SolverError::StepSize(format!(
                "sigma*normL^2 <= 1/tau - alpha1*normA^2/2 violated: {lhs} > {rhs} \
                 (tau = {}, sigma = {}, alpha1 = {alpha1}, normA = {norm_a}, normL = {norm_l})",
                self.tau, self.sigma
            )));
        }
        let delta = self.delta(alpha1, norm_a, norm_l);
        if !(delta > 0.0) {
            return Err(SolverError::StepSize(format!(
                "delta = 2 - alpha1*normA^2/(2*(1/tau - sigma*normL^2)) must be positive, \
                 got {delta}"
            )));
        }
        if self.rho >= delta {
            return Err(SolverError::StepSize(format!(
                "rho < delta violated: rho = {} >= delta = {delta}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Builds a valid [`CondatVuConfig`] from the problem constants.
///
/// `tau_fraction ∈ ]0, 1[` places `1/tau` at `alpha1*normA^2 /
/// (2*tau_fraction)`, and `sigma` saturates the step inequality, which
/// pins the relaxation ceiling at `delta = 1`; the relaxation is set to
/// `rho = 0.99*delta`. With `alpha1 = 5`, `normA = 1`, `normL = 2` and
/// the default fraction `1/2` this gives `tau = 0.2`, `sigma = 0.625`,
/// `rho = 0.99`. When the smooth term vanishes (`normA = 0`) the step
/// inequality only couples `tau` and `sigma`; then `tau = 1`,
/// `sigma = 1/normL^2`, `delta = 2`, `rho = 1.98`.
pub fn condat_vu_autoconfig(
    alpha1: f64,
    norm_a: f64,
    norm_l: f64,
    tau_fraction: f64,
) -> Result<CondatVuConfig, OpError> {
    if !(alpha1 > 0.0) || !alpha1.is_finite() {
        return Err(OpError::Invalid(format!(
            "alpha1 must be positive and finite, got {alpha1}"
        )));
    }
    if !(norm_a >= 0.0) || !norm_a.is_finite() {
        return Err(OpError::Invalid(format!(
            "normA must be nonnegative and finite, got {norm_a}"
        )));
    }
    if !(norm_l > 0.0) || !norm_l.is_finite() {
        return Err(OpError::Invalid(format!(
            "normL must be positive and finite, got {norm_l}"
        )));
    }
    if !(tau_fraction > 0.0 && tau_fraction < 1.0) {
        return Err(OpError::Invalid(format!(
            "tau_fraction must lie in ]0, 1[, got {tau_fraction}"
        )));
    }
    let bound = alpha1 * norm_a * norm_a / 2.0;
    if bound == 0.0 {
        return Ok(CondatVuConfig {
            tau: 1.0,
            sigma: 1.0 / (norm_l * norm_l),
            rho: 0.99 * 2.0,
        });
    }
    let tau = tau_fraction / bound;
    let sigma = (1.0 / tau - bound) / (norm_l * norm_l);
    Ok(CondatVuConfig { tau, sigma, rho: 0.99 })
}

/// Largest dual step admissible for a *fixed* primal step:
/// `sigma = (1/tau - alpha1*normA^2/2) / normL^2`. A negative value means
/// no dual step works at that `tau` — for growing `‖A‖` the fixed-`tau`
/// window closes, which is why [`condat_vu_autoconfig`] shrinks `tau`
/// itself as `alpha1*normA^2` grows.
pub fn sigma_for_tau(alpha1: f64, norm_a: f64, norm_l: f64, tau: f64) -> f64 {
    (1.0 / tau - alpha1 * norm_a * norm_a / 2.0) / (norm_l * norm_l)
}

/// Solves a TV least-squares instance by the relaxed primal–dual
/// proximal iteration
///
/// ```text
/// p⁺ = P_box(x − τ(α₁Aᵀ(Ax − z) + ∇ᵀu))
/// q⁺ = σ(Id − prox_{α₂‖·‖₁/σ})(u/σ + ∇(2p⁺ − x))
/// x⁺ = x + ρ(p⁺ − x)        u⁺ = u + ρ(q⁺ − u)
/// ```
///
/// `config: None` estimates `‖A‖` by power iteration and calls
/// [`condat_vu_autoconfig`] with fraction `1/2`; a supplied config is
/// checked by [`CondatVuConfig::validate`] against the same estimate
/// (skipped under `override_stepsize`). The gradient norm uses the bound
/// [`GRAD_NORM_BOUND`]. Termination measures the relative change of
/// `(x, u)`; trace events carry `x` with the TV dual `u` in the `y` slot.
/// The reported wall time includes the norm estimation.
pub fn condat_vu_solve(
    instance: &ProblemInstance,
    config: Option<&CondatVuConfig>,
    control: &SolveControl,
    mut trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let started = Instant::now();
    let n = instance.n();
    if n < 2 {
        return Err(SolverError::Config(format!(
            "the TV term needs n >= 2, got {n}"
        )));
    }
    let norm_a = operator_norm(&instance.a, NORM_TOL, 10_000).value;
    let config = match config {
        Some(supplied) => {
            if !control.override_stepsize {
                supplied.validate(instance.alpha1, norm_a, GRAD_NORM_BOUND)?;
            }
            *supplied
        }
        None => condat_vu_autoconfig(instance.alpha1, norm_a, GRAD_NORM_BOUND, 0.5)?,
    };
    let (tau, sigma, rho) = (config.tau, config.sigma, config.rho);

    let a = &instance.a;
    let mut x = Vector::zeros(n);
    let mut u = Vector::zeros(n - 1);
    let mut iterations = 0;
    let mut residual;
    let termination = loop {
        let grad_ls = instance.alpha1 * a.tr_mul(&(a * &x - &instance.z));
        let p = project_box(
            &(&x - tau * (&grad_ls + discrete_gradient_adjoint(&u)?)),
            &instance.lower,
            &instance.upper,
        )?;
        let t = &u / sigma + discrete_gradient(&(2.0 * &p - &x))?;
        let q = sigma * (&t - prox_l1(&t, instance.alpha2 / sigma)?);
        let x_next = &x + rho * (&p - &x);
        let u_next = &u + rho * (&q - &u);

        iterations += 1;
        residual = relative_change(&[&x_next, &u_next], &[&x, &u]);
        if !residual.is_finite() {
            return Err(SolverError::Diverged { iteration: iterations });
        }
        if let Some(callback) = trace.as_deref_mut() {
            callback(TraceEvent {
                iteration: iterations,
                residual,
                objective: None,
                x: &x_next,
                y: Some(&u_next),
            });
        }
        x = x_next;
        u = u_next;
        if residual <= control.tol {
            break Termination::Converged;
        }
        if iterations >= control.cap {
            break Termination::IterationCap;
        }
    };

    let value = objective(instance, &x)?.value;
    Ok(SolverReport {
        iterations,
        wall_time_s: started.elapsed().as_secs_f64(),
        final_residual: residual,
        objective: Some(value),
        termination,
        solution: x,
        dual: Some(u),
    })
}

// ---------------------------------------------------------------------------
// Subspace iteration without the cocoercive slot
// ---------------------------------------------------------------------------

/// Step-size ceiling of [`fpif_solve`]: `1/max{2, alpha1}`, the
/// degenerate window `1/L` of an iteration whose forward map carries the
/// whole data term with Lipschitz constant `max{GRAD_NORM_BOUND, alpha1}`.
pub fn fpif_window(alpha1: f64) -> Result<f64, OpError> {
    if !(alpha1 > 0.0) || !alpha1.is_finite() {
        return Err(OpError::Invalid(format!(
            "alpha1 must be positive and finite, got {alpha1}"
        )));
    }
    Ok(1.0 / GRAD_NORM_BOUND.max(alpha1))
}

/// Monotone Lipschitz map of the lifted TV saddle system on
/// `(x, w, u) ∈ ℝⁿ × ℝᵏ × ℝⁿ⁻¹`:
/// `(x, w, u) ↦ (∇ᵀu, α₁(w − z), −∇x)`. The skew coupling between `x`
/// and `u` cancels in the monotonicity pairing; the `w`-block contributes
/// `α₁‖w − w'‖²`.
struct MergedTvMap {
    z: Vector,
    alpha1: f64,
    n: usize,
    k: usize,
}

impl LipschitzMap for MergedTvMap {
    fn apply(&self, point: &Vector) -> Vector {
        let (n, k) = (self.n, self.k);
        let x = point.rows(0, n).into_owned();
        let w = point.rows(n, k).into_owned();
        let u = point.rows(n + k, n - 1).into_owned();
        let mut out = Vector::zeros(2 * n + k - 1);
        out.rows_mut(0, n)
            .copy_from(&discrete_gradient_adjoint(&u).expect("dimension fixed at construction"));
        out.rows_mut(n, k).copy_from(&(self.alpha1 * (&w - &self.z)));
        out.rows_mut(n + k, n - 1)
            .copy_from(&(-discrete_gradient(&x).expect("dimension fixed at construction")));
        out
    }

    fn lipschitz(&self) -> f64 {
        GRAD_NORM_BOUND.max(self.alpha1)
    }
}

/// Blockwise resolvent on the same stack: box projection on `x`, identity
/// on `w` (zero operator), and the resolvent of the conjugate TV term on
/// `u` (a clamp to `[−α₂, α₂]`).
struct MergedTvResolvent {
    lower: Vector,
    upper: Vector,
    tv: SoftThreshold,
    n: usize,
    k: usize,
}

impl MaxMonotoneOracle for MergedTvResolvent {
    fn resolvent(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        let (n, k) = (self.n, self.k);
        if point.len() != 2 * n + k - 1 {
            return Err(OpError::DimensionMismatch { expected: 2 * n + k - 1, found: point.len() });
        }
        let x = point.rows(0, n).into_owned();
        let w = point.rows(n, k).into_owned();
        let u = point.rows(n + k, n - 1).into_owned();
        let mut out = Vector::zeros(2 * n + k - 1);
        out.rows_mut(0, n).copy_from(&project_box(&x, &self.lower, &self.upper)?);
        out.rows_mut(n, k).copy_from(&w);
        out.rows_mut(n + k, n - 1).copy_from(&prox_conjugate(&self.tv, &u, step)?);
        Ok(out)
    }
}

/// Solves a TV least-squares instance by the subspace iteration with an
/// *empty* cocoercive slot: the least-squares gradient rides in the
/// Lipschitz forward map together with the TV coupling, so the step
/// window collapses to [`fpif_window`] — `1/max{2, alpha1}` instead of
/// the larger ceiling of [`lstv_solve`](crate::solvers::lstv_solve).
///
/// The iteration runs on the stack `(x, w, u)` over the subspace
/// `{Ax = w} × ℝⁿ⁻¹`; trace events carry that stack and its annihilator.
/// The report is unpacked to the instance's terms: `solution` is `x`,
/// `dual` the TV dual `u`, `objective` the problem value at `x`, and the
/// wall time includes the kernel factorization.
pub fn fpif_solve(
    instance: &ProblemInstance,
    gamma: f64,
    control: &SolveControl,
    trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let started = Instant::now();
    let (n, k) = (instance.n(), instance.k());
    if n < 2 {
        return Err(SolverError::Config(format!(
            "the TV term needs n >= 2, got {n}"
        )));
    }
    let window = fpif_window(instance.alpha1)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(SolverError::Config(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    if gamma >= window && !control.override_stepsize {
        return Err(SolverError::StepSize(format!(
            "gamma < 1/max{{grad_norm_bound, alpha1}} violated: gamma = {gamma} >= {window} \
             (grad_norm_bound = {GRAD_NORM_BOUND}, alpha1 = {})",
            instance.alpha1
        )));
    }

    let kernel = KernelFactorization::new(instance.a.clone())?;
    let v = LeadingBlockProjector::new(&kernel, n - 1);
    let map = MergedTvMap { z: instance.z.clone(), alpha1: instance.alpha1, n, k };
    let resolvent = MergedTvResolvent {
        lower: instance.lower.clone(),
        upper: instance.upper.clone(),
        tv: SoftThreshold::new(instance.alpha2),
        n,
        k,
    };
    let zero = ZeroOperator::new(2 * n + k - 1);
    let mut report = fpihf_solve(&resolvent, &map, &zero, &v, gamma, None, None, control, trace)?;

    let x = report.solution.rows(0, n).into_owned();
    let u = report.solution.rows(n + k, n - 1).into_owned();
    report.objective = Some(objective(instance, &x)?.value);
    report.solution = x;
    report.dual = Some(u);
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::generate_instance;
    use crate::opcore::DenseMatrix;
    use crate::solvers::{lstv_chi, lstv_solve};
    use approx::assert_abs_diff_eq;

    #[test]
    fn autoconfig_matches_the_worked_example() {
        let config = condat_vu_autoconfig(5.0, 1.0, 2.0, 0.5).unwrap();
        assert_abs_diff_eq!(config.tau, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(config.sigma, 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(config.rho, 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(config.delta(5.0, 1.0, 2.0), 1.0, epsilon = 1e-9);
        config.validate(5.0, 1.0, 2.0).unwrap();

        // Vanishing smooth term: only tau–sigma coupling remains.
        let free = condat_vu_autoconfig(5.0, 0.0, 2.0, 0.5).unwrap();
        assert_eq!(free.tau, 1.0);
        assert_abs_diff_eq!(free.sigma, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(free.rho, 1.98, epsilon = 1e-15);
        assert_eq!(free.delta(5.0, 0.0, 2.0), 2.0);
        free.validate(5.0, 0.0, 2.0).unwrap();

        assert!(condat_vu_autoconfig(0.0, 1.0, 2.0, 0.5).is_err());
        assert!(condat_vu_autoconfig(5.0, -1.0, 2.0, 0.5).is_err());
        assert!(condat_vu_autoconfig(5.0, 1.0, 0.0, 0.5).is_err());
        assert!(condat_vu_autoconfig(5.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn validation_names_each_inequality() {
        let step_violation = CondatVuConfig { tau: 0.2, sigma: 0.7, rho: 0.5 };
        let message = step_violation.validate(5.0, 1.0, 2.0).unwrap_err().to_string();
        assert!(
            message.contains("sigma*normL^2 <= 1/tau - alpha1*normA^2/2"),
            "got: {message}"
        );

        let relaxation_violation = CondatVuConfig { tau: 0.2, sigma: 0.625, rho: 1.0 };
        let message = relaxation_violation.validate(5.0, 1.0, 2.0).unwrap_err().to_string();
        assert!(message.contains("rho < delta"), "got: {message}");

        let negative = CondatVuConfig { tau: -0.2, sigma: 0.625, rho: 0.9 };
        assert!(negative.validate(5.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn fixed_tau_window_closes_as_the_matrix_norm_grows() {
        let small = sigma_for_tau(5.0, 1.0, 2.0, 0.2);
        assert_abs_diff_eq!(small, 0.625, epsilon = 1e-15);
        let large = sigma_for_tau(5.0, 10.0, 2.0, 0.2);
        assert!(large < small);
        assert!(large < 0.0, "no admissible sigma remains at this tau: {large}");
        // The automatic configuration instead shrinks tau and stays valid.
        let config = condat_vu_autoconfig(5.0, 10.0, 2.0, 0.5).unwrap();
        assert!(config.tau < 0.2);
        config.validate(5.0, 10.0, 2.0).unwrap();
    }

    #[test]
    fn primal_dual_iterations_replay_by_hand() {
        let instance = generate_instance(6, 3, 0.3, 5.0, 0.5, 21).unwrap();
        let config = CondatVuConfig { tau: 0.05, sigma: 0.5, rho: 0.9 };
        let mut seen = Vec::new();
        condat_vu_solve(
            &instance,
            Some(&config),
            &SolveControl { tol: 0.0, cap: 3, ..SolveControl::default() },
            Some(&mut |event: TraceEvent<'_>| {
                seen.push((event.x.clone(), event.y.unwrap().clone()))
            }),
        )
        .unwrap();
        assert_eq!(seen.len(), 3);

        let a = &instance.a;
        let mut x = Vector::zeros(6);
        let mut u = Vector::zeros(5);
        for (traced_x, traced_u) in &seen {
            let p = project_box(
                &(&x - config.tau
                    * (instance.alpha1 * a.tr_mul(&(a * &x - &instance.z))
                        + discrete_gradient_adjoint(&u).unwrap())),
                &instance.lower,
                &instance.upper,
            )
            .unwrap();
            // Dual step in its clamp closed form.
            let q = (&u + config.sigma * discrete_gradient(&(2.0 * &p - &x)).unwrap())
                .map(|t| t.clamp(-instance.alpha2, instance.alpha2));
            x = &x + config.rho * (&p - &x);
            u = &u + config.rho * (&q - &u);
            assert!((traced_x - &x).norm() <= 1e-12);
            assert!((traced_u - &u).norm() <= 1e-12);
        }
    }

    #[test]
    fn baselines_reach_the_structured_solver_objective() {
        let instance = generate_instance(20, 10, 0.2, 5.0, 0.5, 7).unwrap();
        let control = SolveControl { tol: 1e-8, ..SolveControl::default() };
        let reference = lstv_solve(
            &instance,
            0.99 * lstv_chi(instance.alpha1).unwrap(),
            &control,
            None,
        )
        .unwrap();
        assert_eq!(reference.termination, Termination::Converged);
        let target = reference.objective.unwrap();

        let cv = condat_vu_solve(&instance, None, &control, None).unwrap();
        assert_eq!(cv.termination, Termination::Converged);
        let cv_gap = (cv.objective.unwrap() - target).abs() / target.abs().max(1.0);
        assert!(cv_gap <= 1e-5, "primal–dual objective gap {cv_gap:e}");

        let window = fpif_window(instance.alpha1).unwrap();
        let fpif = fpif_solve(&instance, 0.99 * window, &control, None).unwrap();
        assert_eq!(fpif.termination, Termination::Converged);
        let fpif_gap = (fpif.objective.unwrap() - target).abs() / target.abs().max(1.0);
        assert!(fpif_gap <= 1e-5, "merged-map objective gap {fpif_gap:e}");
    }

    #[test]
    fn merged_map_is_monotone_and_within_its_constant() {
        let instance = generate_instance(8, 4, 0.25, 5.0, 0.5, 3).unwrap();
        let map = MergedTvMap { z: instance.z.clone(), alpha1: 5.0, n: 8, k: 4 };
        let dim = 2 * 8 + 4 - 1;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = Vector::from_fn(dim, |_, _| rng.gen::<f64>() - 0.5);
            let t = Vector::from_fn(dim, |_, _| rng.gen::<f64>() - 0.5);
            let ds = &s - &t;
            let dm = map.apply(&s) - map.apply(&t);
            assert!(ds.dot(&dm) >= -1e-12, "monotonicity violated");
            assert!(dm.norm() <= map.lipschitz() * ds.norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn merged_window_is_exact() {
        assert_eq!(fpif_window(5.0).unwrap(), 0.2);
        assert_eq!(fpif_window(1.0).unwrap(), 0.5);
        assert_eq!(fpif_window(2.0).unwrap(), 0.5);
        assert!(fpif_window(0.0).is_err());

        let instance = generate_instance(10, 5, 0.2, 5.0, 0.5, 2).unwrap();
        let err = fpif_solve(&instance, 0.2, &SolveControl::default(), None).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("gamma < 1/max{grad_norm_bound, alpha1}"), "got: {message}");
        let report = fpif_solve(
            &instance,
            0.2,
            &SolveControl { override_stepsize: true, cap: 5, ..SolveControl::default() },
            None,
        )
        .unwrap();
        assert!(report.iterations > 0);
    }

    #[test]
    fn merged_resolvent_clamps_each_block() {
        let resolvent = MergedTvResolvent {
            lower: Vector::from_element(3, -1.0),
            upper: Vector::from_element(3, 1.0),
            tv: SoftThreshold::new(0.5),
            n: 3,
            k: 2,
        };
        let point = Vector::from_column_slice(&[2.0, -3.0, 0.5, 7.0, -7.0, 0.9, -0.1]);
        let out = resolvent.resolvent(&point, 0.1).unwrap();
        let expected = Vector::from_column_slice(&[1.0, -1.0, 0.5, 7.0, -7.0, 0.5, -0.1]);
        assert!((out - expected).norm() <= 1e-15);
        assert!(resolvent.resolvent(&Vector::zeros(3), 0.1).is_err());
    }

    #[test]
    fn condat_vu_handles_a_pure_tv_denoising_instance() {
        // A = Id: the iteration is plain TV denoising with a box. The
        // minimizer of 2.5‖x − z‖² + 0.5‖∇x‖₁ flattens the profile.
        let z = Vector::from_column_slice(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let instance = ProblemInstance {
            a: DenseMatrix::identity(6, 6),
            z: z.clone(),
            lower: Vector::from_element(6, -2.0),
            upper: Vector::from_element(6, 2.0),
            alpha1: 5.0,
            alpha2: 0.5,
            kappa: 1.0,
            seed: 0,
        };
        let report = condat_vu_solve(
            &instance,
            None,
            &SolveControl { tol: 1e-10, ..SolveControl::default() },
            None,
        )
        .unwrap();
        assert_eq!(report.termination, Termination::Converged);
        let x = &report.solution;
        // Optimality: x = P_box(x − s(α₁(x − z) + ∇ᵀv)) for the clamped dual.
        let v = report.dual.as_ref().unwrap().map(|t| t.clamp(-0.5, 0.5));
        let s = 1e-2;
        let probe = x - s * (5.0 * (x - &z) + discrete_gradient_adjoint(&v).unwrap());
        let fixed = project_box(&probe, &instance.lower, &instance.upper).unwrap();
        assert!((x - fixed).norm() <= 1e-6);
        // The jump shrinks but stays symmetric.
        assert_abs_diff_eq!(x[0], -x[5], epsilon = 1e-6);
        assert!(x[0] < 1.0 && x[0] > 0.8);
    }
}
