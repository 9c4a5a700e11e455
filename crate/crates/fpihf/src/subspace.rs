//! Orthogonal projectors onto closed subspaces and the resolvent
//! decomposition used by the partial-inverse step.
//!
//! Subspaces enter the solvers only through their orthogonal projector, so
//! everything here implements the small [`SubspaceProjector`] contract:
//! an ambient dimension plus an idempotent, self-adjoint `project`.
//! Constructors cover the two ways subspaces arise in practice — spanned
//! by a basis ([`BasisProjector`]) or cut out as the kernel of a linear
//! map ([`KernelProjector`], [`KernelFactorization`]).

use nalgebra::Cholesky;

use crate::opcore::{DenseMatrix, MaxMonotoneOracle, OpError, Vector};

/// Relative threshold below which basis columns are declared linearly
/// dependent during orthonormalization.
const INDEPENDENCE_THRESHOLD: f64 = 1e-10;

/// Orthogonal projector onto a closed subspace `V` of `ℝⁿ`.
///
/// Implementations must be idempotent and self-adjoint to numerical
/// precision; the solvers lean on both properties every iteration.
pub trait SubspaceProjector {
    /// Dimension `n` of the ambient space.
    fn ambient_dim(&self) -> usize;

    /// `P_V x`, the nearest point of `V`.
    fn project(&self, point: &Vector) -> Vector;

    /// `P_{V⊥} x = x − P_V x`, the projection onto the orthogonal
    /// complement.
    fn complement(&self, point: &Vector) -> Vector {
        point - self.project(point)
    }
}

/// Projector of the whole space (`V = ℝⁿ`); `project` is the identity.
#[derive(Clone, Copy, Debug)]
pub struct IdentityProjector {
    dim: usize,
}

impl IdentityProjector {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SubspaceProjector for IdentityProjector {
    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn project(&self, point: &Vector) -> Vector {
        point.clone()
    }
}

/// Projector onto the span of a set of basis vectors, `P = QQᵀ` with `Q`
/// an orthonormalization of the given columns.
#[derive(Clone, Debug)]
pub struct BasisProjector {
    q: DenseMatrix,
}

impl BasisProjector {
    /// Orthonormalizes `basis` (one subspace generator per column) by a
    /// column-pivoted QR factorization. Columns whose pivot falls below a
    /// relative threshold of 1e-10 are declared dependent and rejected.
    pub fn from_basis(basis: &DenseMatrix) -> Result<Self, OpError> {
        let (rows, cols) = basis.shape();
        if cols == 0 || rows == 0 {
            return Err(OpError::Invalid("basis must have at least one column".into()));
        }
        if cols > rows {
            return Err(OpError::Invalid(format!(
                "{cols} columns cannot be independent in dimension {rows}"
            )));
        }
        let qr = basis.clone().col_piv_qr();
        let r = qr.r();
        let leading = r[(0, 0)].abs();
        if leading == 0.0 {
            return Err(OpError::Invalid("basis is numerically zero".into()));
        }
        for i in 0..cols {
            if r[(i, i)].abs() <= INDEPENDENCE_THRESHOLD * leading {
                return Err(OpError::Invalid(format!(
                    "basis columns are linearly dependent (pivot {} at column {i} below threshold)",
                    r[(i, i)].abs()
                )));
            }
        }
        Ok(Self { q: qr.q() })
    }

    /// The orthonormal basis actually stored (columns span the subspace).
    pub fn orthonormal_basis(&self) -> &DenseMatrix {
        &self.q
    }
}

impl SubspaceProjector for BasisProjector {
    fn ambient_dim(&self) -> usize {
        self.q.nrows()
    }

    fn project(&self, point: &Vector) -> Vector {
        &self.q * self.q.tr_mul(point)
    }
}

/// Projector onto the kernel of a general linear map `T`, materialized as
/// the dense matrix `P = Id − Tᵀ(TTᵀ)⁻¹T`.
#[derive(Clone, Debug)]
pub struct KernelProjector {
    p: DenseMatrix,
    degenerate: bool,
}

impl KernelProjector {
    /// Builds the projector onto `ker T` from the dense matrix of `T`.
    ///
    /// `TTᵀ` is inverted through a Cholesky factorization when it is
    /// positive definite; a rank-deficient `TTᵀ` (redundant rows of `T`)
    /// falls back to an SVD pseudo-inverse and marks the projector
    /// [`degenerate`](Self::is_degenerate) so callers can surface a
    /// diagnostic. The projector itself is still exact in that case.
    pub fn from_kernel(t: &DenseMatrix) -> Result<Self, OpError> {
        let (rows, cols) = t.shape();
        if rows == 0 || cols == 0 {
            return Err(OpError::Invalid("kernel map must be a nonempty matrix".into()));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(OpError::Invalid("kernel map has non-finite entries".into()));
        }
        let gram = t * t.transpose();
        let (solved, degenerate) = match Cholesky::new(gram.clone()) {
            Some(chol) => (chol.solve(t), false),
            None => {
                let pinv = gram
                    .pseudo_inverse(1e-12)
                    .map_err(|e| OpError::Invalid(format!("pseudo-inverse failed: {e}")))?;
                (pinv * t, true)
            }
        };
        let p = DenseMatrix::identity(cols, cols) - t.transpose() * solved;
        Ok(Self { p, degenerate })
    }

    /// True when `TTᵀ` was numerically singular and the pseudo-inverse
    /// fallback was used (the rows of `T` were redundant).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// The dense projector matrix.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.p
    }
}

impl SubspaceProjector for KernelProjector {
    fn ambient_dim(&self) -> usize {
        self.p.nrows()
    }

    fn project(&self, point: &Vector) -> Vector {
        &self.p * point
    }
}

/// Projector onto `V = {(x, w) ∈ ℝⁿ ⊕ ℝᵏ : A x = w}`, the kernel of
/// `T: (x, w) ↦ A x − w`, in the structured form that never materializes
/// the `(n+k)`-dimensional projector:
///
/// `P(x, w) = (x − Aᵀ B (A x − w),  w + B (A x − w))`,
///
/// where `B = (Id + AAᵀ)⁻¹` is computed once, at construction, through a
/// Cholesky factorization of the symmetric positive-definite `Id + AAᵀ`.
#[derive(Clone, Debug)]
pub struct KernelFactorization {
    a: DenseMatrix,
    b_cache: DenseMatrix,
}

impl KernelFactorization {
    pub fn new(a: DenseMatrix) -> Result<Self, OpError> {
        let (k, n) = a.shape();
        if k == 0 || n == 0 {
            return Err(OpError::Invalid("kernel factorization needs a nonempty matrix".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(OpError::Invalid("matrix has non-finite entries".into()));
        }
        let gram = DenseMatrix::identity(k, k) + &a * a.transpose();
        let chol = Cholesky::new(gram).ok_or_else(|| {
            OpError::Invalid("Id + AAᵀ failed its Cholesky factorization".into())
        })?;
        Ok(Self { a, b_cache: chol.inverse() })
    }

    /// Rows of `A` (dimension of the `w` block).
    pub fn k(&self) -> usize {
        self.a.nrows()
    }

    /// Columns of `A` (dimension of the `x` block).
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    /// The cached `(Id + AAᵀ)⁻¹`.
    pub fn b_cache(&self) -> &DenseMatrix {
        &self.b_cache
    }

    /// Applies the cached `B = (Id + AAᵀ)⁻¹` to a `k`-vector.
    pub fn apply_b(&self, t: &Vector) -> Vector {
        &self.b_cache * t
    }

    /// Projects the pair `(x, w)` onto `{A x = w}` without stacking.
    pub fn project_pair(&self, x: &Vector, w: &Vector) -> (Vector, Vector) {
        let bt = self.apply_b(&(&self.a * x - w));
        (x - self.a.tr_mul(&bt), w + bt)
    }
}

impl SubspaceProjector for KernelFactorization {
    fn ambient_dim(&self) -> usize {
        self.n() + self.k()
    }

    fn project(&self, point: &Vector) -> Vector {
        let n = self.n();
        let k = self.k();
        let x = point.rows(0, n).into_owned();
        let w = point.rows(n, k).into_owned();
        let (px, pw) = self.project_pair(&x, &w);
        stack_pair(&px, &pw)
    }
}

/// Projector for a product space whose subspace constrains only the
/// leading block: `V = U × ℝᵐ`, `P(head, tail) = (P_U head, tail)`.
/// Used to lift a subspace constraint into a primal-dual product space.
pub struct LeadingBlockProjector<'a> {
    inner: &'a dyn SubspaceProjector,
    tail_dim: usize,
}

impl<'a> LeadingBlockProjector<'a> {
    pub fn new(inner: &'a dyn SubspaceProjector, tail_dim: usize) -> Self {
        Self { inner, tail_dim }
    }
}

impl SubspaceProjector for LeadingBlockProjector<'_> {
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim() + self.tail_dim
    }

    fn project(&self, point: &Vector) -> Vector {
        let head_dim = self.inner.ambient_dim();
        let head = point.rows(0, head_dim).into_owned();
        let projected = self.inner.project(&head);
        let mut out = point.clone();
        out.rows_mut(0, head_dim).copy_from(&projected);
        out
    }
}

/// Concatenates two vectors into one.
pub fn stack_pair(head: &Vector, tail: &Vector) -> Vector {
    let mut out = Vector::zeros(head.len() + tail.len());
    out.rows_mut(0, head.len()).copy_from(head);
    out.rows_mut(head.len(), tail.len()).copy_from(tail);
    out
}

/// One partial-inverse resolvent step: the decomposition of `input` into
/// `p + γq` with `q ∈ A p`, plus the resolvent value of the partial
/// inverse of `γA` with respect to `V` assembled from it.
#[derive(Clone, Debug)]
pub struct PartialInverseStep {
    /// `p = J_{γA}(input)`.
    pub p: Vector,
    /// `q = (input − p)/γ ∈ A p`.
    pub q: Vector,
    /// `P_V p + γ P_{V⊥} q`, the resolvent of the partial inverse at
    /// `input`.
    pub resolvent_value: Vector,
}

/// Evaluates the resolvent of the partial inverse of `γA` with respect to
/// `V` by a single resolvent call on `A`:
///
/// `p = J_{γA}(input)` and `q = (input − p)/γ` satisfy `p + γq = input`
/// and `q ∈ A p` by construction, and the partial-inverse resolvent is
/// `P_V p + γ P_{V⊥} q`.
pub fn partial_inverse_resolvent(
    a: &dyn MaxMonotoneOracle,
    v: &dyn SubspaceProjector,
    input: &Vector,
    gamma: f64,
) -> Result<PartialInverseStep, OpError> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(OpError::Invalid(format!(
            "partial-inverse step needs a positive finite gamma, got {gamma}"
        )));
    }
    let p = a.resolvent(input, gamma)?;
    if p.len() != input.len() {
        return Err(OpError::DimensionMismatch { expected: input.len(), found: p.len() });
    }
    let q = (input - &p) / gamma;
    let resolvent_value = v.project(&p) + gamma * v.complement(&q);
    Ok(PartialInverseStep { p, q, resolvent_value })
}
