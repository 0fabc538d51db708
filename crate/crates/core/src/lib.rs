//! Numerical verification of fitted-norm stability for perturbed
//! saddle-point systems, with the poromechanics example family and
//! norm-induced block-diagonal preconditioning.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] — dense/sparse kernels: Cholesky, generalized symmetric
//!   eigensolves on possibly singular metrics, preconditioned MinRes.
//! * [`mesh`] — structured right-triangle meshes of the unit square.
//! * [`fem`] — reference elements, quadrature, assembly of the bilinear
//!   forms, boundary conditions and mean-zero handling.
//! * [`saddle`] — the block system `[[A, B^T], [B, -C]]` and the fitted-norm
//!   construction `Qbar = S_Q + C`, `Vbar = S_V + B^T Qbar^{-1} B`.
//! * [`analysis`] — inf-sup/coercivity constants, the explicit witness
//!   construction, and the stability chain check.
//! * [`biot`] — builders for the seven poromechanics example problems.
//! * [`precond`] — norm-induced block-diagonal preconditioning and the
//!   MinRes robustness harness.

pub mod analysis;
pub mod biot;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod precond;
pub mod saddle;

/// Global relative tolerance for SPD/symmetry checks, shared across modules.
pub const SPD_REL_TOL: f64 = 1e-12;

/// Dense eigensolves are refused above this dimension.
pub const DESK_SCALE_LIMIT: usize = 4000;
