//! Splitting algorithms for monotone inclusions that live on a closed
//! subspace.
//!
//! The central problem solved here: find `x` in a closed subspace `V` of a
//! real Euclidean space such that
//!
//! ```text
//! 0 ∈ A x + B x + C x + N_V x
//! ```
//!
//! where `A` is maximally monotone (accessed through its resolvent), `B` is
//! monotone and Lipschitz continuous (evaluated directly, twice per
//! iteration), `C` is cocoercive (evaluated once per iteration), and `N_V`
//! is the normal cone to `V`. The main iteration — forward-partial-inverse-
//! half-forward splitting, FPIHF for short — activates each operator
//! according to its nature: resolvent steps for `A` via the partial inverse
//! with respect to `V`, explicit steps for `B` and `C`, and projections
//! onto `V`.
//!
//! What's in the box:
//!
//! * [`opcore`] — scalar/vector building blocks: proximity operators,
//!   conjugate proximity via the Moreau identity, the step-size ceiling
//!   `chi`, discrete gradients, and a power-iteration operator norm.
//! * [`subspace`] — orthogonal projectors onto subspaces given by a basis
//!   or as the kernel of a linear map, and the resolvent decomposition used
//!   by the partial-inverse step.
//! * [`solvers`] — the FPIHF iteration (general and resolvent form), the
//!   forward-backward-half-forward method it reduces to when `V` is the
//!   whole space, a primal-dual specialization for composite inclusions
//!   with linear couplings, and a dedicated dense path for constrained
//!   total-variation least squares.
//! * [`baselines`] — reference methods for the same TV problem: a
//!   Condat-Vũ primal-dual iteration and a forward-partial-inverse method
//!   that treats the data-fidelity gradient as just another Lipschitz term.
//! * [`bench`] — seeded problem generation, experiment grids, and CSV/text
//!   table emission for benchmark runs.
//!
//! # Example
//!
//! Minimize `½‖x − c‖²` over the diagonal `V = span{(1,1)}` of the plane,
//! i.e. project `c` onto `V`, by running the splitting with `A = B = 0`:
//!
//! ```
//! use fpihf::opcore::{Vector, ZeroOperator, AffineMap};
//! use fpihf::subspace::BasisProjector;
//! use fpihf::solvers::{fpihf_solve, SolveControl};
//! use nalgebra::{DMatrix, DVector};
//!
//! let v = BasisProjector::from_basis(&DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
//! let c = DVector::from_column_slice(&[2.0, 0.0]);
//! // C x = x − c is the gradient of ½‖x − c‖², cocoercive with β = 1.
//! let grad = AffineMap::new(DMatrix::identity(2, 2), -c, 1.0, 1.0);
//! let zero = ZeroOperator::new(2);
//! let report = fpihf_solve(
//!     &zero, &zero, &grad, &v, 0.9, None, None,
//!     &SolveControl { tol: 1e-12, ..SolveControl::default() },
//!     None,
//! )
//! .unwrap();
//! let x = report.solution;
//! assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
//! ```

pub mod baselines;
pub mod bench;
pub mod opcore;
pub mod solvers;
pub mod subspace;

pub use opcore::{DenseMatrix, Vector};
