//! Operator-calculus building blocks: oracle traits for the maps a
//! splitting step touches, proximity operators, the step-size ceiling, and
//! small dense linear-algebra utilities shared by the solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense column vector over `f64`. All solver state lives in these.
pub type Vector = nalgebra::DVector<f64>;

/// Dense matrix over `f64`, column-major.
pub type DenseMatrix = nalgebra::DMatrix<f64>;

/// Upper bound on the operator norm of [`discrete_gradient`] regardless of
/// dimension: the forward-difference map has norm `2·sin(π(n−1)/(2n)) < 2`.
pub const DISCRETE_GRADIENT_NORM_BOUND: f64 = 2.0;

/// Errors raised by the operator-level building blocks.
#[derive(Debug, Error)]
pub enum OpError {
    /// An input entry was NaN or infinite.
    #[error("non-finite entry at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },
    /// Two arguments that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// A scalar or structural precondition was violated.
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn check_finite(v: &Vector) -> Result<(), OpError> {
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() {
            return Err(OpError::NonFinite { index, value });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Oracle traits
// ---------------------------------------------------------------------------

/// Proximity operator of a proper lower-semicontinuous convex function `f`:
/// `prox(x, γ)` returns `argmin_u f(u) + ‖u − x‖²/(2γ)`.
pub trait ProxOracle {
    fn prox(&self, point: &Vector, step: f64) -> Result<Vector, OpError>;
}

/// Resolvent oracle of a maximally monotone operator `A`:
/// `resolvent(x, γ)` returns `J_{γA}(x) = (Id + γA)⁻¹ x`.
///
/// For `A = ∂f` the resolvent is exactly the proximity operator of `f`;
/// wrap any [`ProxOracle`] in [`Subdifferential`] to use it here.
pub trait MaxMonotoneOracle {
    fn resolvent(&self, point: &Vector, step: f64) -> Result<Vector, OpError>;
}

/// A monotone, Lipschitz-continuous map evaluated pointwise. The reported
/// constant feeds the step-size window; it may be a safe upper bound.
pub trait LipschitzMap {
    fn apply(&self, point: &Vector) -> Vector;
    /// Lipschitz constant `L ≥ 0`. Zero means the map is constant (in
    /// particular the zero map).
    fn lipschitz(&self) -> f64;
}

/// A cocoercive map: `⟨x − y, M x − M y⟩ ≥ β ‖M x − M y‖²` for some
/// `β > 0`. Gradients of convex functions with `1/β`-Lipschitz gradient
/// qualify.
pub trait CocoerciveMap {
    fn apply(&self, point: &Vector) -> Vector;
    /// Cocoercivity modulus `β > 0`. `f64::INFINITY` is allowed and means
    /// the map is identically a constant (use it for the zero map); the
    /// step-size ceiling [`chi`] then degrades gracefully to `1/L`.
    fn cocoercivity(&self) -> f64;
}

impl<T: ProxOracle + ?Sized> ProxOracle for &T {
    fn prox(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        (**self).prox(point, step)
    }
}

impl<T: MaxMonotoneOracle + ?Sized> MaxMonotoneOracle for &T {
    fn resolvent(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        (**self).resolvent(point, step)
    }
}

impl<T: LipschitzMap + ?Sized> LipschitzMap for &T {
    fn apply(&self, point: &Vector) -> Vector {
        (**self).apply(point)
    }

    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
}

impl<T: CocoerciveMap + ?Sized> CocoerciveMap for &T {
    fn apply(&self, point: &Vector) -> Vector {
        (**self).apply(point)
    }

    fn cocoercivity(&self) -> f64 {
        (**self).cocoercivity()
    }
}

/// Treats a proximity operator as the resolvent of the subdifferential of
/// its function, i.e. `A = ∂f` with `J_{γA} = prox_{γf}`.
pub struct Subdifferential<P>(pub P);

impl<P: ProxOracle> MaxMonotoneOracle for Subdifferential<P> {
    fn resolvent(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        self.0.prox(point, step)
    }
}

/// The zero operator on a space of fixed dimension. Usable in every oracle
/// slot: as `A = 0` (resolvent = identity), as a Lipschitz map with `L = 0`
/// and as a cocoercive map with `β = ∞`.
#[derive(Clone, Debug)]
pub struct ZeroOperator {
    dim: usize,
}

impl ZeroOperator {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl MaxMonotoneOracle for ZeroOperator {
    fn resolvent(&self, point: &Vector, _step: f64) -> Result<Vector, OpError> {
        Ok(point.clone())
    }
}

/// As a [`ProxOracle`] the zero operator stands for the zero *function*,
/// whose proximity operator is the identity.
impl ProxOracle for ZeroOperator {
    fn prox(&self, point: &Vector, _step: f64) -> Result<Vector, OpError> {
        Ok(point.clone())
    }
}

impl LipschitzMap for ZeroOperator {
    fn apply(&self, point: &Vector) -> Vector {
        Vector::zeros(point.len().max(self.dim))
    }

    fn lipschitz(&self) -> f64 {
        0.0
    }
}

impl CocoerciveMap for ZeroOperator {
    fn apply(&self, point: &Vector) -> Vector {
        Vector::zeros(point.len().max(self.dim))
    }

    fn cocoercivity(&self) -> f64 {
        f64::INFINITY
    }
}

/// Affine map `x ↦ M x + b` with caller-supplied monotonicity constants.
/// Implements both [`LipschitzMap`] and [`CocoerciveMap`]; the caller is
/// responsible for the constants being valid for `M` (e.g. `L = ‖M‖`, and
/// `β = 1/‖M‖` for symmetric positive semidefinite `M`).
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub matrix: DenseMatrix,
    pub offset: Vector,
    pub lipschitz: f64,
    pub cocoercivity: f64,
}

impl AffineMap {
    pub fn new(matrix: DenseMatrix, offset: Vector, lipschitz: f64, cocoercivity: f64) -> Self {
        Self { matrix, offset, lipschitz, cocoercivity }
    }
}

impl LipschitzMap for AffineMap {
    fn apply(&self, point: &Vector) -> Vector {
        &self.matrix * point + &self.offset
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl CocoerciveMap for AffineMap {
    fn apply(&self, point: &Vector) -> Vector {
        &self.matrix * point + &self.offset
    }

    fn cocoercivity(&self) -> f64 {
        self.cocoercivity
    }
}

/// Maximally monotone affine operator `A x = M x + b` for a monotone
/// matrix `M` (symmetric positive semidefinite, skew, or any sum of the
/// two), with the resolvent `J_{γA}(x) = (Id + γM)⁻¹(x − γb)` evaluated by
/// a dense LU solve on every call. Intended for modest dimensions.
#[derive(Clone, Debug)]
pub struct AffineResolvent {
    matrix: DenseMatrix,
    offset: Vector,
}

impl AffineResolvent {
    pub fn new(matrix: DenseMatrix, offset: Vector) -> Self {
        Self { matrix, offset }
    }

    /// Direct evaluation `A x = M x + b`, handy for graph-membership
    /// checks `q ∈ A p` in tests.
    pub fn apply(&self, point: &Vector) -> Vector {
        &self.matrix * point + &self.offset
    }
}

impl MaxMonotoneOracle for AffineResolvent {
    fn resolvent(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        let dim = self.matrix.nrows();
        if point.len() != dim {
            return Err(OpError::DimensionMismatch { expected: dim, found: point.len() });
        }
        let shifted = DenseMatrix::identity(dim, dim) + step * &self.matrix;
        shifted
            .lu()
            .solve(&(point - step * &self.offset))
            .ok_or_else(|| OpError::Invalid("resolvent system Id + γM was singular".into()))
    }
}

/// Proximity operator of `weight · ‖·‖₁` (componentwise soft-thresholding
/// with threshold `weight · step`).
#[derive(Clone, Copy, Debug)]
pub struct SoftThreshold {
    pub weight: f64,
}

impl SoftThreshold {
    pub fn new(weight: f64) -> Self {
        Self { weight }
    }
}

impl ProxOracle for SoftThreshold {
    fn prox(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        prox_l1(point, self.weight * step)
    }
}

/// Indicator function of the box `[lower, upper]`; its proximity operator
/// is the componentwise clamp, independent of the step. Also serves as the
/// resolvent of the normal cone to the box.
#[derive(Clone, Debug)]
pub struct BoxIndicator {
    lower: Vector,
    upper: Vector,
}

impl BoxIndicator {
    pub fn new(lower: Vector, upper: Vector) -> Result<Self, OpError> {
        if lower.len() != upper.len() {
            return Err(OpError::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        for i in 0..lower.len() {
            if lower[i].is_nan() || upper[i].is_nan() {
                return Err(OpError::Invalid(format!("box bound is NaN at index {i}")));
            }
            if lower[i] > upper[i] {
                return Err(OpError::Invalid(format!(
                    "box bounds crossed at index {i}: lower {} > upper {}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }
}

impl ProxOracle for BoxIndicator {
    fn prox(&self, point: &Vector, _step: f64) -> Result<Vector, OpError> {
        project_box(point, &self.lower, &self.upper)
    }
}

impl MaxMonotoneOracle for BoxIndicator {
    fn resolvent(&self, point: &Vector, _step: f64) -> Result<Vector, OpError> {
        project_box(point, &self.lower, &self.upper)
    }
}

// ---------------------------------------------------------------------------
// Proximity operators
// ---------------------------------------------------------------------------

/// Componentwise soft-thresholding, the proximity operator of
/// `threshold · ‖·‖₁` at unit step:
/// `y_i = sign(x_i) · max(|x_i| − threshold, 0)`.
///
/// ```
/// use fpihf::opcore::prox_l1;
/// use nalgebra::DVector;
/// let y = prox_l1(&DVector::from_column_slice(&[3.0, -0.5, 1.0]), 1.0).unwrap();
/// assert_eq!(y.as_slice(), &[2.0, 0.0, 0.0]);
/// ```
pub fn prox_l1(point: &Vector, threshold: f64) -> Result<Vector, OpError> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(OpError::Invalid(format!(
            "soft-threshold level must be nonnegative and finite, got {threshold}"
        )));
    }
    check_finite(point)?;
    Ok(point.map(|t| t.signum() * (t.abs() - threshold).max(0.0)))
}

/// Proximity operator of the Fenchel conjugate `f*`, computed from the
/// proximity operator of `f` through the Moreau identity:
///
/// `prox_{γ f*}(x) = x − γ · prox_{f/γ}(x/γ)`.
///
/// No oracle for `f*` is ever needed; only `f`'s prox is evaluated.
pub fn prox_conjugate(f: &dyn ProxOracle, point: &Vector, step: f64) -> Result<Vector, OpError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(OpError::Invalid(format!("prox step must be positive and finite, got {step}")));
    }
    let inner = f.prox(&(point / step), 1.0 / step)?;
    Ok(point - step * inner)
}

/// Proximity oracle for `f*` built from a prox oracle for `f` via
/// [`prox_conjugate`].
pub struct ConjugateProx<P>(pub P);

impl<P: ProxOracle> ProxOracle for ConjugateProx<P> {
    fn prox(&self, point: &Vector, step: f64) -> Result<Vector, OpError> {
        prox_conjugate(&self.0, point, step)
    }
}

/// Componentwise projection onto the box `[lower, upper]`.
pub fn project_box(point: &Vector, lower: &Vector, upper: &Vector) -> Result<Vector, OpError> {
    if lower.len() != point.len() {
        return Err(OpError::DimensionMismatch { expected: point.len(), found: lower.len() });
    }
    if upper.len() != point.len() {
        return Err(OpError::DimensionMismatch { expected: point.len(), found: upper.len() });
    }
    let mut out = point.clone();
    for i in 0..point.len() {
        if lower[i] > upper[i] {
            return Err(OpError::Invalid(format!(
                "box bounds crossed at index {i}: lower {} > upper {}",
                lower[i], upper[i]
            )));
        }
        out[i] = point[i].clamp(lower[i], upper[i]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Step-size ceiling
// ---------------------------------------------------------------------------

/// Step-size ceiling for an iteration that combines a `β`-cocoercive map
/// (one activation) with an `L`-Lipschitz map (two activations):
///
/// `χ = 4β / (1 + √(1 + 16 β² L²))`,
///
/// which lies in `]0, min{2β, 1/L}]` and degrades gracefully at the
/// edges: exactly `2β` at `L = 0` (and whenever `βL` is below roundoff),
/// and `1/L` as `β → ∞` (the value returned for `β = f64::INFINITY`).
///
/// The square root is evaluated as `hypot(1, 4βL)`; if even the product
/// `4βL` exceeds the floating range, the algebraically equivalent
/// reciprocal form `1/(q + hypot(q, L))` with `q = 1/(4β)` takes over, so
/// no admissible constants overflow.
///
/// ```
/// use fpihf::opcore::chi;
/// assert_eq!(chi(1.0, 0.0).unwrap(), 2.0);
/// ```
pub fn chi(beta: f64, lipschitz: f64) -> Result<f64, OpError> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(OpError::Invalid(format!("cocoercivity modulus must be positive, got {beta}")));
    }
    if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
        return Err(OpError::Invalid(format!(
            "Lipschitz constant must be finite and nonnegative, got {lipschitz}"
        )));
    }
    if beta.is_infinite() {
        return Ok(if lipschitz > 0.0 { 1.0 / lipschitz } else { f64::INFINITY });
    }
    let scaled = 4.0 * beta * lipschitz;
    if scaled.is_finite() {
        Ok(4.0 * beta / (1.0 + 1.0f64.hypot(scaled)))
    } else {
        let q = 0.25 / beta;
        Ok(1.0 / (q + q.hypot(lipschitz)))
    }
}

// ---------------------------------------------------------------------------
// Discrete gradient (forward differences)
// ---------------------------------------------------------------------------

/// Forward-difference map `∇: ℝⁿ → ℝⁿ⁻¹`, `(∇x)_i = x_{i+1} − x_i`.
/// Requires `n ≥ 2`.
///
/// ```
/// use fpihf::opcore::discrete_gradient;
/// use nalgebra::DVector;
/// let g = discrete_gradient(&DVector::from_column_slice(&[1.0, 3.0, 2.0])).unwrap();
/// assert_eq!(g.as_slice(), &[2.0, -1.0]);
/// ```
pub fn discrete_gradient(point: &Vector) -> Result<Vector, OpError> {
    let n = point.len();
    if n < 2 {
        return Err(OpError::Invalid(format!(
            "discrete gradient needs dimension >= 2, got {n}"
        )));
    }
    Ok(Vector::from_fn(n - 1, |i, _| point[i + 1] - point[i]))
}

/// Adjoint of [`discrete_gradient`]: maps `u ∈ ℝⁿ⁻¹` to
/// `∇ᵀu = (−u_1, u_1 − u_2, …, u_{n−2} − u_{n−1}, u_{n−1}) ∈ ℝⁿ`.
pub fn discrete_gradient_adjoint(dual: &Vector) -> Result<Vector, OpError> {
    let m = dual.len();
    if m < 1 {
        return Err(OpError::Invalid("discrete gradient adjoint needs dimension >= 1".into()));
    }
    let mut out = Vector::zeros(m + 1);
    out[0] = -dual[0];
    for i in 1..m {
        out[i] = dual[i - 1] - dual[i];
    }
    out[m] = dual[m - 1];
    Ok(out)
}

/// Dense matrix of the forward-difference map on `ℝⁿ`, mostly useful for
/// tests and for stacking into product-space operators.
pub fn discrete_gradient_matrix(n: usize) -> Result<DenseMatrix, OpError> {
    if n < 2 {
        return Err(OpError::Invalid(format!(
            "discrete gradient needs dimension >= 2, got {n}"
        )));
    }
    let mut d = DenseMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Operator norm by power iteration
// ---------------------------------------------------------------------------

/// Outcome of [`operator_norm`].
#[derive(Clone, Copy, Debug)]
pub struct NormEstimate {
    /// Estimated largest singular value.
    pub value: f64,
    /// Successive estimates got within the requested relative tolerance
    /// before the iteration budget ran out.
    pub converged: bool,
    /// The input matrix was numerically zero; the 0 estimate is exact but
    /// flagged so callers can warn.
    pub zero_matrix: bool,
    /// Power-iteration steps actually taken.
    pub iterations: usize,
}

/// Seed for the deterministic start vector of the power iteration, so that
/// repeated runs on the same matrix give bit-identical estimates.
const POWER_ITERATION_SEED: u64 = 0x6f70_6e6f_726d;

/// Largest singular value of a dense matrix by power iteration on `AᵀA`,
/// to relative tolerance `tol` on successive estimates.
///
/// The start vector is drawn from a fixed-seed generator, making the
/// estimate deterministic. A zero matrix yields `value = 0` with the
/// `zero_matrix` flag set.
pub fn operator_norm(a: &DenseMatrix, tol: f64, max_iterations: usize) -> NormEstimate {
    if a.iter().all(|&t| t == 0.0) {
        return NormEstimate { value: 0.0, converged: true, zero_matrix: true, iterations: 0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut v = Vector::from_fn(a.ncols(), |_, _| rng.gen::<f64>() - 0.5);
    // A nonzero matrix can still annihilate the start vector; redraw.
    while (a * &v).norm() == 0.0 {
        v = Vector::from_fn(a.ncols(), |_, _| rng.gen::<f64>() - 0.5);
    }
    v /= v.norm();

    let mut sigma = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let w = a * &v;
        let estimate = w.norm();
        iterations += 1;
        if estimate == 0.0 {
            // v drifted into the null space (only possible through rounding).
            break;
        }
        let next = a.tr_mul(&w);
        let next_norm = next.norm();
        if next_norm > 0.0 {
            v = next / next_norm;
        }
        if (estimate - sigma).abs() <= tol * estimate.max(f64::MIN_POSITIVE) {
            sigma = estimate;
            converged = true;
            break;
        }
        sigma = estimate;
    }
    NormEstimate { value: sigma, converged, zero_matrix: false, iterations }
}
