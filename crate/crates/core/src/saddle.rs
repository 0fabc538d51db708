//! The perturbed saddle-point data model and the fitted-norm constructor.
//!
//! A block system realizes the operator `[[A, B^T], [B, -C]]` with A, C
//! symmetric PSD. Fitted norms are built from seminorm matrices `S_V`, `S_Q`
//! as `Qbar = S_Q + C` and `Vbar = S_V + B^T Qbar^{-1} B`, the combined
//! metric being `blockdiag(Vbar, Qbar)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{cholesky_factor, CholeskyFactor, LinalgError, SparseMatrix};
use crate::SPD_REL_TOL;

#[derive(Debug, Error)]
pub enum SaddleError {
    #[error("Qbar = S_Q + C is not SPD (min/max eigenvalue ratio {0:e}); the seminorm split is unusable")]
    QbarSingular(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Assembled block operators plus space metadata.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub c: SparseMatrix,
    /// Human-readable description of the V and Q spaces.
    pub label: String,
}

impl BlockSystem {
    /// Validate symmetry/PSD flags and dimensions.
    pub fn new(
        a: SparseMatrix,
        b: SparseMatrix,
        c: SparseMatrix,
        label: impl Into<String>,
    ) -> Result<Self, SaddleError> {
        let a = a.flag_psd()?;
        let c = c.flag_psd()?;
        if b.ncols() != a.nrows() || b.nrows() != c.nrows() {
            return Err(SaddleError::DimensionMismatch(format!(
                "B is {}x{} against A {}x{} and C {}x{}",
                b.nrows(),
                b.ncols(),
                a.nrows(),
                a.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            label: label.into(),
        })
    }

    pub fn n_v(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_q(&self) -> usize {
        self.c.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n_v() + self.n_q()
    }

    /// Dense block operator `[[A, B^T], [B, -C]]`.
    pub fn block_dense(&self) -> DMatrix<f64> {
        let (nv, nq) = (self.n_v(), self.n_q());
        let mut m = DMatrix::zeros(nv + nq, nv + nq);
        m.view_mut((0, 0), (nv, nv)).copy_from(&self.a.to_dense());
        let bd = self.b.to_dense();
        m.view_mut((0, nv), (nv, nq)).copy_from(&bd.transpose());
        m.view_mut((nv, 0), (nq, nv)).copy_from(&bd);
        m.view_mut((nv, nv), (nq, nq)).copy_from(&(-self.c.to_dense()));
        m
    }
}

/// A vector in the product space, `(u; p)`.
#[derive(Debug, Clone)]
pub struct CombinedVector {
    pub u: DVector<f64>,
    pub p: DVector<f64>,
}

impl CombinedVector {
    pub fn zeros(n_v: usize, n_q: usize) -> Self {
        Self {
            u: DVector::zeros(n_v),
            p: DVector::zeros(n_q),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            u: &self.u * s,
            p: &self.p * s,
        }
    }
}

/// Fitted-norm metric data: seminorms, `Qbar`, `Vbar`, and their factors.
#[derive(Debug, Clone)]
pub struct FittedNorms {
    pub s_q: DMatrix<f64>,
    pub s_v: DMatrix<f64>,
    pub qbar: DMatrix<f64>,
    pub vbar: DMatrix<f64>,
    qbar_chol: CholeskyFactor,
    vbar_chol: CholeskyFactor,
}

/// Build the fitted norms for a system from seminorm matrices.
///
/// Fails with `QbarSingular` when `S_Q + C` is not SPD to the relative
/// tolerance 1e-12 (smallest over largest eigenvalue of the equilibrated
/// matrix), signalling an unusable seminorm split.
pub fn build_fitted_norms(
    sys: &BlockSystem,
    s_q: &SparseMatrix,
    s_v: &SparseMatrix,
) -> Result<FittedNorms, SaddleError> {
    if s_q.nrows() != sys.n_q() || s_q.ncols() != sys.n_q() {
        return Err(SaddleError::DimensionMismatch(format!(
            "S_Q is {}x{}, expected {0}x{0} for n_q = {}",
            s_q.nrows(),
            s_q.ncols(),
            sys.n_q()
        )));
    }
    if s_v.nrows() != sys.n_v() || s_v.ncols() != sys.n_v() {
        return Err(SaddleError::DimensionMismatch(format!(
            "S_V is {}x{}, expected square of n_v = {}",
            s_v.nrows(),
            s_v.ncols(),
            sys.n_v()
        )));
    }
    let qbar_sparse = s_q.add_scaled(1.0, &sys.c)?;
    let qbar = qbar_sparse.to_dense();
    // SPD gate: equilibrated eigenvalue ratio above the global tolerance
    if sys.n_q() > 0 {
        let d = crate::linalg::equilibration(&qbar);
        let mut qs = qbar.clone();
        for i in 0..qs.nrows() {
            for j in 0..qs.ncols() {
                qs[(i, j)] *= d[i] * d[j];
            }
        }
        let (w, _) = crate::linalg::sym_eig_ascending(&qs);
        let n = w.len();
        let ratio = if w[n - 1] > 0.0 { w[0] / w[n - 1] } else { -1.0 };
        if !(ratio > SPD_REL_TOL) {
            return Err(SaddleError::QbarSingular(ratio));
        }
    }
    let qbar_chol = cholesky_factor(&qbar_sparse, 0.0)?;
    let b_dense = sys.b.to_dense();
    let qinv_b = qbar_chol.solve_mat(&b_dense);
    let mut vbar = s_v.to_dense() + b_dense.transpose() * qinv_b;
    // symmetrize within tolerance only; a larger defect means Qbar solves failed
    let asym = (vbar.clone() - vbar.transpose()).amax();
    let scale = vbar.amax().max(1e-300);
    if asym > 1e-10 * scale {
        return Err(SaddleError::Linalg(LinalgError::NotSymmetric {
            err: asym,
            tol: 1e-10 * scale,
        }));
    }
    vbar = (vbar.clone() + vbar.transpose()) * 0.5;
    let vbar_chol = crate::linalg::cholesky_from_dense(&vbar)?;
    Ok(FittedNorms {
        s_q: s_q.to_dense(),
        s_v: s_v.to_dense(),
        qbar,
        vbar,
        qbar_chol,
        vbar_chol,
    })
}

impl FittedNorms {
    pub fn n_v(&self) -> usize {
        self.vbar.nrows()
    }

    pub fn n_q(&self) -> usize {
        self.qbar.nrows()
    }

    /// `Qbar^{-1} y`.
    pub fn qbar_solve(&self, y: &DVector<f64>) -> DVector<f64> {
        self.qbar_chol.solve(y)
    }

    /// `Vbar^{-1} y`.
    pub fn vbar_solve(&self, y: &DVector<f64>) -> DVector<f64> {
        self.vbar_chol.solve(y)
    }

    pub fn qbar_solve_mat(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.qbar_chol.solve_mat(y)
    }

    pub fn vbar_solve_mat(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.vbar_chol.solve_mat(y)
    }

    /// Dense combined metric `blockdiag(Vbar, Qbar)`.
    pub fn combined_metric(&self) -> DMatrix<f64> {
        let (nv, nq) = (self.n_v(), self.n_q());
        let mut m = DMatrix::zeros(nv + nq, nv + nq);
        m.view_mut((0, 0), (nv, nv)).copy_from(&self.vbar);
        m.view_mut((nv, nv), (nq, nq)).copy_from(&self.qbar);
        m
    }
}

/// `(A u + B^T p; B u - C p)`.
pub fn apply_block_operator(
    sys: &BlockSystem,
    x: &CombinedVector,
) -> Result<CombinedVector, SaddleError> {
    if x.u.len() != sys.n_v() || x.p.len() != sys.n_q() {
        return Err(SaddleError::DimensionMismatch(format!(
            "vector ({}, {}) against system ({}, {})",
            x.u.len(),
            x.p.len(),
            sys.n_v(),
            sys.n_q()
        )));
    }
    let au = sys.a.matvec(&x.u);
    let btp = sys.b.matvec_transpose(&x.p);
    let bu = sys.b.matvec(&x.u);
    let cp = sys.c.matvec(&x.p);
    Ok(CombinedVector {
        u: au + btp,
        p: bu - cp,
    })
}

/// `sqrt(u' Vbar u + p' Qbar p)`; zero iff `x = 0`.
pub fn combined_norm(norms: &FittedNorms, x: &CombinedVector) -> f64 {
    let vu = x.u.dot(&(&norms.vbar * &x.u));
    let qp = x.p.dot(&(&norms.qbar * &x.p));
    (vu + qp).max(0.0).sqrt()
}

/// The bilinear form `A(x, y) = u'Av + v'B'p + u'B'q - p'Cq` evaluated
/// through the block operator.
pub fn block_form(sys: &BlockSystem, x: &CombinedVector, y: &CombinedVector) -> f64 {
    let ax = apply_block_operator(sys, x).expect("dimension checked by caller");
    ax.u.dot(&y.u) + ax.p.dot(&y.p)
}
