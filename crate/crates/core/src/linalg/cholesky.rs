//! Dense Cholesky with diagonal equilibration, realizing SPD inverses.

use nalgebra::{DMatrix, DVector};

use super::{dense, LinalgError, SparseMatrix};

const PIVOT_REL_TOL: f64 = 1e-14;

/// Lower-triangular Cholesky factor of `M + shift I` (identity permutation).
///
/// Internally the factorization runs on the equilibrated matrix
/// `D (M + shift I) D`; [`CholeskyFactor::lower`] undoes the scaling so that
/// `L L^T` reconstructs the input.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l_scaled: DMatrix<f64>,
    scale: DVector<f64>,
    dim: usize,
}

/// Factor a symmetric PSD matrix, optionally shifted.
///
/// Fails with `NonSpd` when a pivot of the equilibrated matrix falls at or
/// below `1e-14` times its largest diagonal entry.
pub fn cholesky_factor(m: &SparseMatrix, shift: f64) -> Result<CholeskyFactor, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "cholesky of {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.max_abs().max(shift.abs()).max(1e-300);
    let err = m.symmetry_error();
    if err > crate::SPD_REL_TOL * scale {
        return Err(LinalgError::NotSymmetric {
            err,
            tol: crate::SPD_REL_TOL * scale,
        });
    }
    let mut dense_m = m.to_dense();
    for i in 0..dense_m.nrows() {
        dense_m[(i, i)] += shift;
    }
    cholesky_dense(&dense_m)
}

pub(crate) fn cholesky_dense(dense_m: &DMatrix<f64>) -> Result<CholeskyFactor, LinalgError> {
    let n = dense_m.nrows();
    let d = dense::equilibration(dense_m);
    let mut a = dense::scale_sym(dense_m, &d);
    let max_diag = (0..n).fold(0.0f64, |mx, i| mx.max(a[(i, i)]));
    let threshold = PIVOT_REL_TOL * max_diag.max(1e-300);
    for j in 0..n {
        let mut piv = a[(j, j)];
        for k in 0..j {
            piv -= a[(j, k)] * a[(j, k)];
        }
        if piv <= threshold {
            return Err(LinalgError::NonSpd {
                pivot: piv,
                index: j,
                threshold,
            });
        }
        let ljj = piv.sqrt();
        a[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / ljj;
        }
        for k in (j + 1)..n {
            a[(j, k)] = 0.0;
        }
    }
    Ok(CholeskyFactor {
        l_scaled: a,
        scale: d,
        dim: n,
    })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The lower-triangular factor `L` with `L L^T = M + shift I`.
    pub fn lower(&self) -> DMatrix<f64> {
        let mut l = self.l_scaled.clone();
        for i in 0..self.dim {
            for j in 0..=i {
                l[(i, j)] /= self.scale[i];
            }
        }
        l
    }

    /// Solve `(M + shift I) x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        // M = D^{-1} Ls Ls^T D^{-1}  =>  x = D Ls^{-T} Ls^{-1} D b
        let n = self.dim;
        assert_eq!(b.len(), n, "cholesky solve dimension mismatch");
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = b[i] * self.scale[i];
        }
        for i in 0..n {
            for k in 0..i {
                let t = x[k];
                x[i] -= self.l_scaled[(i, k)] * t;
            }
            x[i] /= self.l_scaled[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = x[k];
                x[i] -= self.l_scaled[(k, i)] * t;
            }
            x[i] /= self.l_scaled[(i, i)];
        }
        for i in 0..n {
            x[i] *= self.scale[i];
        }
        x
    }

    /// Columnwise solve, `(M + shift I)^{-1} B`.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, b.ncols());
        for j in 0..b.ncols() {
            let col = DVector::from_column_slice(b.column(j).as_slice());
            out.set_column(j, &self.solve(&col));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor_is_identity() {
        let m = SparseMatrix::identity(3);
        let f = cholesky_factor(&m, 0.0).unwrap();
        let l = f.lower();
        assert!((l - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn hand_factor_2x2() {
        // [[4,2],[2,3]] = L L^T with L = [[2,0],[1,sqrt(2)]]
        let m =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)])
                .unwrap();
        let f = cholesky_factor(&m, 0.0).unwrap();
        let l = f.lower();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((l[(1, 1)] - 2.0f64.sqrt()).abs() < 1e-14);
        assert!(l[(0, 1)].abs() == 0.0);
    }

    #[test]
    fn indefinite_rejected() {
        let m =
            SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)])
                .unwrap();
        match cholesky_factor(&m, 0.0) {
            Err(LinalgError::NonSpd { .. }) => {}
            other => panic!("expected NonSpd, got {other:?}"),
        }
    }

    #[test]
    fn shift_rescues_singular() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(cholesky_factor(&m, 0.0).is_err());
        let f = cholesky_factor(&m, 0.5).unwrap();
        let b = DVector::from_vec(vec![1.5, 1.0]);
        let x = f.solve(&b);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_error_small() {
        // badly scaled SPD matrix
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 4e8),
                (0, 1, 1e2),
                (1, 0, 1e2),
                (1, 1, 3e-4),
                (2, 2, 5.0),
                (0, 2, 1e3),
                (2, 0, 1e3),
            ],
        )
        .unwrap();
        let f = cholesky_factor(&m, 0.0).unwrap();
        let l = f.lower();
        let rec = &l * l.transpose();
        let err = (rec - m.to_dense()).amax();
        assert!(err <= 1e-10 * m.max_abs(), "reconstruction error {err:e}");
    }
}
