//! Primal-dual specialization: solves coupled inclusions
//!
//! ```text
//! 0 ∈ A x + M x + Σᵢ Lᵢᵀ uᵢ + C x + N_V x
//! 0 ∈ Bᵢ⁻¹ uᵢ + Nᵢ uᵢ − Lᵢ x + Dᵢ uᵢ          (i = 1, …, m)
//! ```
//!
//! by running the forward-partial-inverse-half-forward iteration on the
//! product space ℝᴺ × ℝ^{K₁} × ⋯ × ℝ^{K_m} with the subspace `V × ℝᴷ`.
//! Here `A` and each `Bᵢ⁻¹` are maximally monotone (given by resolvents),
//! `M` and each `Nᵢ` are monotone and Lipschitz, `C` and each `Dᵢ` are
//! cocoercive, and the `Lᵢ` are coupling matrices.
//!
//! The per-iteration updates are written out block by block; the module
//! also exposes the stacked operators themselves ([`StackedInclusion`]) so
//! that the blockwise loop can be cross-checked against the generic
//! subspace solver run on the product space.

use std::time::Instant;

use crate::opcore::{
    chi, operator_norm, CocoerciveMap, ConjugateProx, DenseMatrix, LipschitzMap,
    MaxMonotoneOracle, OpError, ProxOracle, Subdifferential, Vector, ZeroOperator,
};
use crate::solvers::fpihf::{gate_gamma, validate_initial_points};
use crate::solvers::{
    relative_change, SolveControl, SolverError, SolverReport, Termination, TraceEvent, TraceFn,
};
use crate::subspace::SubspaceProjector;

/// One dual component of the primal-dual inclusion.
pub struct DualBlock<'a> {
    /// Resolvent oracle of the maximally monotone part `Bᵢ⁻¹`.
    pub resolvent: &'a dyn MaxMonotoneOracle,
    /// Monotone Lipschitz part `Nᵢ` (use [`ZeroOperator`] when absent).
    pub lipschitz_part: &'a dyn LipschitzMap,
    /// Cocoercive part `Dᵢ` (use [`ZeroOperator`] when absent).
    pub cocoercive_part: &'a dyn CocoerciveMap,
    /// Coupling matrix `Lᵢ`, mapping the primal space into this block.
    pub linear: DenseMatrix,
}

impl DualBlock<'_> {
    pub fn dim(&self) -> usize {
        self.linear.nrows()
    }
}

/// One term `gᵢ(Lᵢ·)` (optionally infimally smoothed) of the composite
/// objective handled by [`composite_opt_solve`]. The dual resolvent is
/// derived from the proximity operator of `gᵢ` through the Moreau
/// identity, so only the primal prox needs to be supplied.
pub struct CompositeBlock<'a> {
    /// Proximity oracle of `gᵢ` itself; the iteration applies the
    /// conjugate `prox_{γgᵢ*}` internally.
    pub g_prox: &'a dyn ProxOracle,
    /// Gradient of the conjugate of the smoothing term, a cocoercive map;
    /// `None` when the block is not smoothed.
    pub conjugate_gradient: Option<&'a dyn CocoerciveMap>,
    /// Coupling matrix `Lᵢ`.
    pub linear: DenseMatrix,
}

/// The product-space operators behind [`primal_dual_solve`], exposed so
/// that the blockwise iteration can be compared against the generic
/// solver applied to the stacked inclusion
/// `0 ∈ 𝑨(x,u) + 𝑩(x,u) + 𝑪(x,u) + N_{V×ℝᴷ}(x,u)`.
///
/// Stacking layout: the primal vector occupies the leading `primal_dim`
/// entries, followed by the dual blocks in order. The aggregated
/// constants are `L = max{μ, ν₁, …, ν_m} + √(Σᵢ ‖Lᵢ‖²)` and
/// `β = min{ζ, δ₁, …, δ_m}`.
pub struct StackedInclusion<'a> {
    a: &'a dyn MaxMonotoneOracle,
    m: &'a dyn LipschitzMap,
    c: &'a dyn CocoerciveMap,
    blocks: &'a [DualBlock<'a>],
    primal_dim: usize,
    linear_norms: Vec<f64>,
    lipschitz: f64,
    cocoercivity: f64,
}

impl<'a> StackedInclusion<'a> {
    pub fn new(
        a: &'a dyn MaxMonotoneOracle,
        m: &'a dyn LipschitzMap,
        c: &'a dyn CocoerciveMap,
        blocks: &'a [DualBlock<'a>],
        primal_dim: usize,
    ) -> Result<Self, OpError> {
        if primal_dim == 0 {
            return Err(OpError::Invalid("primal dimension must be positive".into()));
        }
        let mut linear_norms = Vec::with_capacity(blocks.len());
        let mut coupling_sq = 0.0;
        let mut max_single = m.lipschitz();
        let mut cocoercivity = c.cocoercivity();
        for block in blocks {
            if block.linear.ncols() != primal_dim {
                return Err(OpError::DimensionMismatch {
                    expected: primal_dim,
                    found: block.linear.ncols(),
                });
            }
            if block.dim() == 0 {
                return Err(OpError::Invalid("dual blocks must have positive dimension".into()));
            }
            let norm = operator_norm(&block.linear, 1e-10, 10_000).value;
            coupling_sq += norm * norm;
            linear_norms.push(norm);
            max_single = max_single.max(block.lipschitz_part.lipschitz());
            cocoercivity = cocoercivity.min(block.cocoercive_part.cocoercivity());
        }
        Ok(Self {
            a,
            m,
            c,
            blocks,
            primal_dim,
            linear_norms,
            lipschitz: max_single + coupling_sq.sqrt(),
            cocoercivity,
        })
    }

    pub fn primal_dim(&self) -> usize {
        self.primal_dim
    }

    pub fn dual_dim(&self) -> usize {
        self.blocks.iter().map(DualBlock::dim).sum()
    }

    pub fn total_dim(&self) -> usize {
        self.primal_dim + self.dual_dim()
    }

    /// Aggregated Lipschitz constant of the stacked monotone part.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Aggregated cocoercivity constant of the stacked cocoercive part.
    pub fn cocoercivity(&self) -> f64 {
        self.cocoercivity
    }

    /// Estimated operator norms `‖Lᵢ‖`, in block order.
    pub fn linear_norms(&self) -> &[f64] {
        &self.linear_norms
    }

    /// Splits a stacked vector into the primal part and the dual blocks.
    pub fn split(&self, stacked: &Vector) -> (Vector, Vec<Vector>) {
        let primal = stacked.rows(0, self.primal_dim).into_owned();
        let mut duals = Vec::with_capacity(self.blocks.len());
        let mut offset = self.primal_dim;
        for block in self.blocks {
            duals.push(stacked.rows(offset, block.dim()).into_owned());
            offset += block.dim();
        }
        (primal, duals)
    }

    /// Concatenates a primal part and dual blocks into a stacked vector.
    pub fn join(&self, primal: &Vector, duals: &[Vector]) -> Vector {
        let mut out = Vector::zeros(self.total_dim());
        out.rows_mut(0, self.primal_dim).copy_from(primal);
        let mut offset = self.primal_dim;
        for (block, dual) in self.blocks.iter().zip(duals) {
            out.rows_mut(offset, block.dim()).copy_from(dual);
            offset += block.dim();
        }
        out
    }

    /// The stacked maximally monotone operator `(x, u) ↦ Ax × ∏ᵢ Bᵢ⁻¹uᵢ`.
    pub fn resolvent_op(&self) -> StackedResolvent<'_> {
        StackedResolvent(self)
    }

    /// The stacked monotone Lipschitz operator
    /// `(x, u) ↦ (Mx + Σᵢ Lᵢᵀuᵢ, (Nᵢuᵢ − Lᵢx)ᵢ)`.
    pub fn forward_op(&self) -> StackedForward<'_> {
        StackedForward(self)
    }

    /// The stacked cocoercive operator `(x, u) ↦ (Cx, (Dᵢuᵢ)ᵢ)`.
    pub fn cocoercive_op(&self) -> StackedCocoercive<'_> {
        StackedCocoercive(self)
    }
}

pub struct StackedResolvent<'a>(&'a StackedInclusion<'a>);

impl MaxMonotoneOracle for StackedResolvent<'_> {
    fn resolvent(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        let stack = self.0;
        let (primal_in, duals_in) = stack.split(point);
        let primal = stack.a.resolvent(&primal_in, step)?;
        if primal.len() != stack.primal_dim {
            return Err(OpError::DimensionMismatch {
                expected: stack.primal_dim,
                found: primal.len(),
            });
        }
        let mut duals = Vec::with_capacity(stack.blocks.len());
        for (block, dual_in) in stack.blocks.iter().zip(&duals_in) {
            let dual = block.resolvent.resolvent(dual_in, step)?;
            if dual.len() != block.dim() {
                return Err(OpError::DimensionMismatch {
                    expected: block.dim(),
                    found: dual.len(),
                });
            }
            duals.push(dual);
        }
        Ok(stack.join(&primal, &duals))
    }
}

pub struct StackedForward<'a>(&'a StackedInclusion<'a>);

impl LipschitzMap for StackedForward<'_> {
    fn apply(&self, point: &Vector) -> Vector {
        let stack = self.0;
        let (primal_in, duals_in) = stack.split(point);
        let mut primal = stack.m.apply(&primal_in);
        for (block, dual) in stack.blocks.iter().zip(&duals_in) {
            primal += block.linear.tr_mul(dual);
        }
        let duals: Vec<Vector> = stack
            .blocks
            .iter()
            .zip(&duals_in)
            .map(|(block, dual)| block.lipschitz_part.apply(dual) - &block.linear * &primal_in)
            .collect();
        stack.join(&primal, &duals)
    }

    fn lipschitz(&self) -> f64 {
        self.0.lipschitz
    }
}

pub struct StackedCocoercive<'a>(&'a StackedInclusion<'a>);

impl CocoerciveMap for StackedCocoercive<'_> {
    fn apply(&self, point: &Vector) -> Vector {
        let stack = self.0;
        let (primal_in, duals_in) = stack.split(point);
        let primal = stack.c.apply(&primal_in);
        let duals: Vec<Vector> = stack
            .blocks
            .iter()
            .zip(&duals_in)
            .map(|(block, dual)| block.cocoercive_part.apply(dual))
            .collect();
        stack.join(&primal, &duals)
    }

    fn cocoercivity(&self) -> f64 {
        self.0.cocoercivity
    }
}

fn validate_dual_init(
    blocks: &[DualBlock<'_>],
    u0: Option<&[Vector]>,
) -> Result<Vec<Vector>, SolverError> {
    match u0 {
        None => Ok(blocks.iter().map(|b| Vector::zeros(b.dim())).collect()),
        Some(init) => {
            if init.len() != blocks.len() {
                return Err(SolverError::Config(format!(
                    "u0 supplies {} blocks, the problem has {}",
                    init.len(),
                    blocks.len()
                )));
            }
            for (i, (block, u)) in blocks.iter().zip(init).enumerate() {
                if u.len() != block.dim() {
                    return Err(SolverError::Config(format!(
                        "u0 block {i} has dimension {}, expected {}",
                        u.len(),
                        block.dim()
                    )));
                }
            }
            Ok(init.to_vec())
        }
    }
}

/// Solves the primal-dual inclusion by the blockwise form of the
/// subspace-splitting iteration. Each iteration performs, with `q = P_V p`:
///
/// ```text
/// p       = J_{γA}(x + γy − γ P_V(Mx + Σᵢ Lᵢᵀuᵢ + Cx))
/// rᵢ      = J_{γBᵢ⁻¹}(uᵢ − γ(Nᵢuᵢ − Lᵢx + Dᵢuᵢ))
/// x⁺      = q + γ P_V(Mx + Σᵢ Lᵢᵀuᵢ − Mq − Σᵢ Lᵢᵀrᵢ)
/// uᵢ⁺     = rᵢ − γ(Nᵢrᵢ − Nᵢuᵢ − Lᵢ(q − x))
/// y⁺      = y − (p − q)/γ
/// ```
///
/// which is exactly the subspace iteration on the stacked operators of
/// [`StackedInclusion`]. The step is gated by `γ < chi(β, L)` with the
/// aggregated constants. The report's `solution` is the primal point and
/// `dual` the concatenated dual blocks; trace events carry the full
/// stacked iterate.
#[allow(clippy::too_many_arguments)]
pub fn primal_dual_solve(
    a: &dyn MaxMonotoneOracle,
    m: &dyn LipschitzMap,
    c: &dyn CocoerciveMap,
    v: &dyn SubspaceProjector,
    blocks: &[DualBlock<'_>],
    gamma: f64,
    x0: Option<&Vector>,
    y0: Option<&Vector>,
    u0: Option<&[Vector]>,
    control: &SolveControl,
    mut trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let stacked = StackedInclusion::new(a, m, c, blocks, v.ambient_dim())?;
    let (beta, lipschitz) = (stacked.cocoercivity(), stacked.lipschitz());
    let ceiling = chi(beta, lipschitz)?;
    gate_gamma(gamma, ceiling, beta, lipschitz, control)?;
    let (mut x, mut y) = validate_initial_points(v, x0, y0)?;
    let mut us = validate_dual_init(blocks, u0)?;

    let started = Instant::now();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let termination = 'outer: loop {
        // Forward evaluations at the current point.
        let mut b_primal = m.apply(&x);
        for (block, u) in blocks.iter().zip(&us) {
            b_primal += block.linear.tr_mul(u);
        }
        let forward = v.project(&(&b_primal + c.apply(&x)));

        // Backward (resolvent) steps, primal and per block.
        let p = match a.resolvent(&(&x + gamma * (&y - &forward)), gamma) {
            Ok(p) => p,
            Err(_) => break Termination::OracleError,
        };
        let q = v.project(&p);
        let mut rs = Vec::with_capacity(blocks.len());
        let mut dual_forwards = Vec::with_capacity(blocks.len());
        for (block, u) in blocks.iter().zip(&us) {
            let bd = block.lipschitz_part.apply(u) - &block.linear * &x;
            let dual_forward = &bd + block.cocoercive_part.apply(u);
            match block.resolvent.resolvent(&(u - gamma * &dual_forward), gamma) {
                Ok(r) => {
                    rs.push(r);
                    dual_forwards.push(bd);
                }
                Err(_) => break 'outer Termination::OracleError,
            }
        }

        // Half-forward corrections.
        let mut br_primal = m.apply(&q);
        for (block, r) in blocks.iter().zip(&rs) {
            br_primal += block.linear.tr_mul(r);
        }
        let x_next = &q + gamma * v.project(&(&b_primal - &br_primal));
        let us_next: Vec<Vector> = blocks
            .iter()
            .zip(&rs)
            .zip(&dual_forwards)
            .map(|((block, r), bd)| {
                let brd = block.lipschitz_part.apply(r) - &block.linear * &q;
                r + gamma * (bd - brd)
            })
            .collect();
        let y_next = &y - (&p - &q) / gamma;

        iterations += 1;
        let mut current: Vec<&Vector> = Vec::with_capacity(blocks.len() + 2);
        current.push(&x_next);
        current.extend(us_next.iter());
        current.push(&y_next);
        let mut previous: Vec<&Vector> = Vec::with_capacity(blocks.len() + 2);
        previous.push(&x);
        previous.extend(us.iter());
        previous.push(&y);
        residual = relative_change(&current, &previous);
        if !residual.is_finite() {
            return Err(SolverError::Diverged { iteration: iterations });
        }
        if let Some(callback) = trace.as_deref_mut() {
            let x_stack = stacked.join(&x_next, &us_next);
            // Dual entries of the annihilator are identically zero.
            let y_stack = stacked.join(&y_next, &[]);
            callback(TraceEvent {
                iteration: iterations,
                residual,
                objective: None,
                x: &x_stack,
                y: Some(&y_stack),
            });
        }
        x = x_next;
        us = us_next;
        y = y_next;
        if residual <= control.tol {
            break Termination::Converged;
        }
        if iterations >= control.cap {
            break Termination::IterationCap;
        }
    };

    let mut dual = Vector::zeros(stacked.dual_dim());
    let mut offset = 0;
    for u in &us {
        dual.rows_mut(offset, u.len()).copy_from(u);
        offset += u.len();
    }
    Ok(SolverReport {
        iterations,
        wall_time_s: started.elapsed().as_secs_f64(),
        final_residual: residual,
        objective: None,
        termination,
        solution: x,
        dual: Some(dual),
    })
}

/// Minimizes `f(x) + Σᵢ (gᵢ ⊓ ℓᵢ)(Lᵢx) + h(x)` over `x ∈ V`, where `⊓`
/// denotes infimal convolution (a block with no smoothing term uses plain
/// `gᵢ(Lᵢx)`), `f` and the `gᵢ` enter through proximity operators and `h`
/// through its cocoercive gradient.
///
/// This is [`primal_dual_solve`] with `A = ∂f`, `M = 0`, `C = ∇h`,
/// `Bᵢ⁻¹ = ∂gᵢ*` (prox computed from `gᵢ` by the Moreau identity),
/// `Nᵢ = 0` and `Dᵢ = ∇ℓᵢ*`. With all smoothing terms absent the dual
/// update reduces to `uᵢ⁺ = rᵢ + γLᵢ(q − x)`.
#[allow(clippy::too_many_arguments)]
pub fn composite_opt_solve(
    f_prox: &dyn ProxOracle,
    grad_h: &dyn CocoerciveMap,
    v: &dyn SubspaceProjector,
    blocks: &[CompositeBlock<'_>],
    gamma: f64,
    x0: Option<&Vector>,
    y0: Option<&Vector>,
    u0: Option<&[Vector]>,
    control: &SolveControl,
    trace: Option<&mut TraceFn>,
) -> Result<SolverReport, SolverError> {
    let primal = Subdifferential(f_prox);
    let m_zero = ZeroOperator::new(v.ambient_dim());
    let dual_resolvents: Vec<Subdifferential<ConjugateProx<&dyn ProxOracle>>> = blocks
        .iter()
        .map(|b| Subdifferential(ConjugateProx(b.g_prox)))
        .collect();
    let zero_parts: Vec<ZeroOperator> =
        blocks.iter().map(|b| ZeroOperator::new(b.linear.nrows())).collect();
    let dual_blocks: Vec<DualBlock<'_>> = blocks
        .iter()
        .zip(&dual_resolvents)
        .zip(&zero_parts)
        .map(|((b, resolvent), zero)| DualBlock {
            resolvent,
            lipschitz_part: zero,
            cocoercive_part: b
                .conjugate_gradient
                .unwrap_or(zero as &dyn CocoerciveMap),
            linear: b.linear.clone(),
        })
        .collect();
    primal_dual_solve(
        &primal, &m_zero, grad_h, v, &dual_blocks, gamma, x0, y0, u0, control, trace,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{AffineMap, AffineResolvent, BoxIndicator, SoftThreshold};
    use crate::solvers::{fpihf_solve, Termination};
    use crate::subspace::{BasisProjector, IdentityProjector, LeadingBlockProjector};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
        Vector::from_fn(n, |_, _| scale * (rng.gen::<f64>() - 0.5))
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| scale * (rng.gen::<f64>() - 0.5))
    }

    fn psd_gradient(rng: &mut ChaCha8Rng, n: usize) -> AffineMap {
        let s = random_matrix(rng, n, n, 1.0);
        let norm_sq = operator_norm(&s, 1e-12, 10_000).value.powi(2);
        let target = random_vector(rng, n, 1.0);
        AffineMap::new(s.tr_mul(&s), -s.tr_mul(&target), norm_sq, 1.0 / norm_sq)
    }

    fn skew_map(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> AffineMap {
        let s = random_matrix(rng, n, n, scale);
        let skew = &s - s.transpose();
        let norm = operator_norm(&skew, 1e-12, 10_000).value;
        AffineMap::new(skew, Vector::zeros(n), norm, f64::INFINITY)
    }

    #[test]
    fn blockwise_loop_matches_engine_on_stacked_operators() {
        // Build a 12-dimensional instance (primal 6, two dual blocks of 3)
        // and compare the blockwise iteration against the generic solver
        // run on the explicitly stacked operators.
        let mut rng = ChaCha8Rng::seed_from_u64(314);
        let primal_dim = 6;
        let v = BasisProjector::from_basis(&random_matrix(&mut rng, primal_dim, 3, 1.0)).unwrap();

        let sym = random_matrix(&mut rng, primal_dim, primal_dim, 0.6);
        let a_matrix = sym.tr_mul(&sym) + {
            let k = random_matrix(&mut rng, primal_dim, primal_dim, 0.4);
            &k - k.transpose()
        };
        let a = AffineResolvent::new(a_matrix, random_vector(&mut rng, primal_dim, 0.5));
        let m = skew_map(&mut rng, primal_dim, 0.5);
        let c = psd_gradient(&mut rng, primal_dim);

        let soft = Subdifferential(SoftThreshold::new(0.4));
        let clamp = BoxIndicator::new(
            Vector::from_element(3, -1.0),
            Vector::from_element(3, 1.0),
        )
        .unwrap();
        let n1 = skew_map(&mut rng, 3, 0.3);
        let n2 = ZeroOperator::new(3);
        let d1 = ZeroOperator::new(3);
        let d2 = psd_gradient(&mut rng, 3);
        let blocks = [
            DualBlock {
                resolvent: &soft,
                lipschitz_part: &n1,
                cocoercive_part: &d1,
                linear: random_matrix(&mut rng, 3, primal_dim, 0.8),
            },
            DualBlock {
                resolvent: &clamp,
                lipschitz_part: &n2,
                cocoercive_part: &d2,
                linear: random_matrix(&mut rng, 3, primal_dim, 0.8),
            },
        ];

        let stacked = StackedInclusion::new(&a, &m, &c, &blocks, primal_dim).unwrap();
        assert_eq!(stacked.total_dim(), 12);
        let gamma = 0.9 * chi(stacked.cocoercivity(), stacked.lipschitz()).unwrap();

        let x0 = v.project(&random_vector(&mut rng, primal_dim, 1.0));
        let y0 = v.complement(&random_vector(&mut rng, primal_dim, 1.0));
        let u0 = vec![random_vector(&mut rng, 3, 1.0), random_vector(&mut rng, 3, 1.0)];
        let control = SolveControl { tol: 0.0, cap: 50, ..SolveControl::default() };

        let mut blockwise = Vec::new();
        primal_dual_solve(
            &a,
            &m,
            &c,
            &v,
            &blocks,
            gamma,
            Some(&x0),
            Some(&y0),
            Some(&u0),
            &control,
            Some(&mut |event: TraceEvent<'_>| {
                blockwise.push((event.x.clone(), event.y.unwrap().clone()))
            }),
        )
        .unwrap();

        let v_stack = LeadingBlockProjector::new(&v, stacked.dual_dim());
        let x0_stack = stacked.join(&x0, &u0);
        let y0_stack = stacked.join(&y0, &[Vector::zeros(3), Vector::zeros(3)]);
        let mut engine = Vec::new();
        fpihf_solve(
            &stacked.resolvent_op(),
            &stacked.forward_op(),
            &stacked.cocoercive_op(),
            &v_stack,
            gamma,
            Some(&x0_stack),
            Some(&y0_stack),
            &control,
            Some(&mut |event: TraceEvent<'_>| {
                engine.push((event.x.clone(), event.y.unwrap().clone()))
            }),
        )
        .unwrap();

        assert_eq!(blockwise.len(), 50);
        assert_eq!(engine.len(), 50);
        for ((xb, yb), (xe, ye)) in blockwise.iter().zip(&engine) {
            assert!((xb - xe).norm() <= 1e-12 * (1.0 + xe.norm()));
            assert!((yb - ye).norm() <= 1e-12 * (1.0 + ye.norm()));
        }
    }

    #[test]
    fn zero_coupling_block_freezes_and_replays_plain_solver() {
        // m = 1 with L₁ = 0, N₁ = D₁ = 0, B₁⁻¹ = ∂ι_{{0}}: the dual block
        // stays at zero and the primal path equals the plain solver's.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let primal_dim = 5;
        let v = BasisProjector::from_basis(&random_matrix(&mut rng, primal_dim, 2, 1.0)).unwrap();
        let a = Subdifferential(SoftThreshold::new(0.2));
        let m = skew_map(&mut rng, primal_dim, 0.5);
        let c = psd_gradient(&mut rng, primal_dim);
        let zero_dual = BoxIndicator::new(Vector::zeros(2), Vector::zeros(2)).unwrap();
        let zero2 = ZeroOperator::new(2);
        let blocks = [DualBlock {
            resolvent: &zero_dual,
            lipschitz_part: &zero2,
            cocoercive_part: &zero2,
            linear: DenseMatrix::zeros(2, primal_dim),
        }];
        let gamma = 0.9 * chi(c.cocoercivity, m.lipschitz).unwrap();
        let control = SolveControl { tol: 0.0, cap: 40, ..SolveControl::default() };

        let mut coupled = Vec::new();
        primal_dual_solve(
            &a,
            &m,
            &c,
            &v,
            &blocks,
            gamma,
            None,
            None,
            None,
            &control,
            Some(&mut |event: TraceEvent<'_>| coupled.push(event.x.clone())),
        )
        .unwrap();

        let mut plain = Vec::new();
        fpihf_solve(
            &a,
            &m,
            &c,
            &v,
            gamma,
            None,
            None,
            &control,
            Some(&mut |event: TraceEvent<'_>| plain.push(event.x.clone())),
        )
        .unwrap();

        assert_eq!(coupled.len(), plain.len());
        for (stacked_x, x) in coupled.iter().zip(&plain) {
            let primal = stacked_x.rows(0, primal_dim).into_owned();
            let dual = stacked_x.rows(primal_dim, 2).into_owned();
            assert!((primal - x).norm() <= 1e-12 * (1.0 + x.norm()));
            assert_eq!(dual.norm(), 0.0, "decoupled dual block must stay frozen at 0");
        }
    }

    #[test]
    fn zero_data_iterates_stay_constant() {
        let primal_dim = 4;
        let v = IdentityProjector::new(primal_dim);
        let zero_p = ZeroOperator::new(primal_dim);
        let zero_d = ZeroOperator::new(3);
        let blocks = [DualBlock {
            resolvent: &zero_d,
            lipschitz_part: &zero_d,
            cocoercive_part: &zero_d,
            linear: DenseMatrix::zeros(3, primal_dim),
        }];
        let x0 = Vector::from_column_slice(&[1.0, -2.0, 3.0, 0.5]);
        let u0 = vec![Vector::from_column_slice(&[0.3, -0.1, 2.0])];
        let report = primal_dual_solve(
            &zero_p,
            &zero_p,
            &zero_p,
            &v,
            &blocks,
            1.0,
            Some(&x0),
            None,
            Some(&u0),
            &SolveControl { tol: 0.0, cap: 5, ..SolveControl::default() },
            None,
        )
        .unwrap();
        // The relative change is exactly zero, so the very first
        // iteration already counts as converged.
        assert_eq!(report.termination, Termination::Converged);
        assert_eq!(report.iterations, 1);
        assert!((report.solution - &x0).norm() <= 1e-15);
        assert!((report.dual.unwrap() - &u0[0]).norm() <= 1e-15);
    }

    #[test]
    fn composite_without_blocks_minimizes_smooth_part() {
        // f = 0, no blocks, h = ½‖· − z‖² on V = ℝⁿ: the minimizer is z.
        let z = Vector::from_column_slice(&[1.0, -0.5, 2.0]);
        let grad = AffineMap::new(DenseMatrix::identity(3, 3), -z.clone(), 1.0, 1.0);
        let v = IdentityProjector::new(3);
        let zero = ZeroOperator::new(3);
        let report = composite_opt_solve(
            &zero,
            &grad,
            &v,
            &[],
            1.0,
            None,
            None,
            None,
            &SolveControl { tol: 1e-12, ..SolveControl::default() },
            None,
        )
        .unwrap();
        assert_eq!(report.termination, Termination::Converged);
        assert!((report.solution - z).norm() <= 1e-9);
    }

    #[test]
    fn composite_dual_update_without_smoothing_term() {
        // One hand-computed iteration of the composite specialization with
        // g = w‖·‖₁ (so prox_{γg*} clamps to [−w, w]) and no smoothing:
        // r = clamp(u + γLx), u⁺ = r + γL(q − x), x⁺ = q + γP_V Lᵀ(u − r).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let weight = 0.7;
        let v = BasisProjector::from_basis(&random_matrix(&mut rng, n, 2, 1.0)).unwrap();
        let l = random_matrix(&mut rng, 3, n, 1.0);
        let z = random_vector(&mut rng, n, 1.0);
        let grad_h = AffineMap::new(DenseMatrix::identity(n, n), -z.clone(), 1.0, 1.0);
        let f = SoftThreshold::new(0.25);
        let g = SoftThreshold::new(weight);
        let blocks = [CompositeBlock { g_prox: &g, conjugate_gradient: None, linear: l.clone() }];

        let x0 = v.project(&random_vector(&mut rng, n, 1.0));
        let u0 = vec![random_vector(&mut rng, 3, 0.5)];
        let l_norm = operator_norm(&l, 1e-12, 10_000).value;
        let gamma = 0.9 * chi(1.0, l_norm).unwrap();

        let mut first = None;
        composite_opt_solve(
            &f,
            &grad_h,
            &v,
            &blocks,
            gamma,
            Some(&x0),
            None,
            Some(&u0),
            &SolveControl { tol: 0.0, cap: 1, ..SolveControl::default() },
            Some(&mut |event: TraceEvent<'_>| {
                first = Some(event.x.clone());
            }),
        )
        .unwrap();
        let first = first.unwrap();

        // Independent replay with the clamp closed form for prox_{γg*}.
        let forward = v.project(&(l.tr_mul(&u0[0]) + &grad_h.matrix * &x0 + &grad_h.offset));
        let p = f.prox(&(&x0 - gamma * &forward), gamma).unwrap();
        let q = v.project(&p);
        let r = (&u0[0] + gamma * (&l * &x0)).map(|t| t.clamp(-weight, weight));
        let u1 = &r + gamma * (&l * (&q - &x0));
        let x1 = &q + gamma * v.project(&l.tr_mul(&(&u0[0] - &r)));

        assert!((first.rows(0, n).into_owned() - x1).norm() <= 1e-10);
        assert!((first.rows(n, 3).into_owned() - u1).norm() <= 1e-10);
    }

    #[test]
    fn aggregated_step_gate_names_the_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 3;
        let v = IdentityProjector::new(n);
        let zero = ZeroOperator::new(n);
        let c = psd_gradient(&mut rng, n);
        let zero_d = ZeroOperator::new(2);
        let blocks = [DualBlock {
            resolvent: &zero_d,
            lipschitz_part: &zero_d,
            cocoercive_part: &zero_d,
            linear: random_matrix(&mut rng, 2, n, 1.0),
        }];
        let err = primal_dual_solve(
            &zero,
            &zero,
            &c,
            &v,
            &blocks,
            1e9,
            None,
            None,
            None,
            &SolveControl::default(),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("gamma < chi"), "got: {err}");

        let bad_u0 = vec![Vector::zeros(5)];
        let err = primal_dual_solve(
            &zero,
            &zero,
            &c,
            &v,
            &blocks,
            0.1,
            None,
            None,
            Some(&bad_u0),
            &SolveControl::default(),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("u0 block 0"), "got: {err}");
    }

    #[test]
    fn stacked_operator_constants_aggregate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let zero = ZeroOperator::new(n);
        let c = AffineMap::new(DenseMatrix::identity(n, n), Vector::zeros(n), 1.0, 1.0);
        let m = skew_map(&mut rng, n, 1.0);
        let zero_d = ZeroOperator::new(2);
        let l1 = DenseMatrix::from_fn(2, n, |i, j| if i == j { 3.0 } else { 0.0 });
        let l2 = DenseMatrix::from_fn(2, n, |i, j| if i == j { 4.0 } else { 0.0 });
        let blocks = [
            DualBlock {
                resolvent: &zero_d,
                lipschitz_part: &zero_d,
                cocoercive_part: &zero_d,
                linear: l1,
            },
            DualBlock {
                resolvent: &zero_d,
                lipschitz_part: &zero_d,
                cocoercive_part: &zero_d,
                linear: l2,
            },
        ];
        let stacked = StackedInclusion::new(&zero, &m, &c, &blocks, n).unwrap();
        // ‖L₁‖ = 3, ‖L₂‖ = 4 ⇒ √(9 + 16) = 5; single-operator max is ‖M‖.
        assert_abs_diff_eq!(stacked.lipschitz(), m.lipschitz + 5.0, epsilon = 1e-8);
        assert_abs_diff_eq!(stacked.cocoercivity(), 1.0, epsilon = 1e-12);
        let norms = stacked.linear_norms();
        assert_abs_diff_eq!(norms[0], 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(norms[1], 4.0, epsilon = 1e-8);
    }
}
