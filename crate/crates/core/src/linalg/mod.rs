//! Self-contained dense/sparse kernels used by every downstream module.

mod cholesky;
mod dense;
mod eig;
mod minres;
mod sparse;

pub use cholesky::{cholesky_factor, CholeskyFactor};
pub use eig::{gen_sym_eig, EigenPencilResult, PencilMode};
pub use minres::{minres, MinresResult};
pub use sparse::SparseMatrix;

pub(crate) use cholesky::cholesky_dense as cholesky_from_dense;
pub(crate) use dense::{equilibration, sym_eig_ascending};
pub(crate) use eig::gen_sym_eig_dense;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not SPD: pivot {pivot:e} at index {index} (threshold {threshold:e})")]
    NonSpd {
        pivot: f64,
        index: usize,
        threshold: f64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("metric matrix is numerically zero; pencil has empty range")]
    EmptyRange,
    #[error("matrix fails the symmetry check: |M - M^T|_max = {err:e} > {tol:e}")]
    NotSymmetric { err: f64, tol: f64 },
    #[error("metric matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("MinRes Lanczos breakdown: beta = {beta:e} below {threshold:e} with residual {rel_residual:e}")]
    BreakdownDetected {
        beta: f64,
        threshold: f64,
        rel_residual: f64,
    },
    #[error("problem size {n} exceeds the desk-scale ceiling {limit}")]
    DeskScaleExceeded { n: usize, limit: usize },
}
