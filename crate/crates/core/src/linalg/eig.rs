//! Generalized symmetric eigensolves on possibly singular metrics.

use nalgebra::{DMatrix, DVector};

use super::{dense, LinalgError, SparseMatrix};
use crate::{DESK_SCALE_LIMIT, SPD_REL_TOL};

/// Relative spectral cutoff below which metric directions count as kernel.
pub const METRIC_TRUNCATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilMode {
    Full,
    Extremal,
}

/// Result of `M1 x = theta M2 x` restricted to the complement of `ker(M2)`.
#[derive(Debug, Clone)]
pub struct EigenPencilResult {
    /// Ascending; only min and max in `Extremal` mode.
    pub eigenvalues: Vec<f64>,
    /// Matching columns, M2-orthonormal on the complement of the kernel.
    pub eigenvectors: DMatrix<f64>,
    /// Detected dimension of `ker(M2)`.
    pub kernel_dim: usize,
    pub mode: PencilMode,
}

/// Solve the symmetric pencil `M1 x = theta M2 x`.
///
/// `M1` must be symmetric (indefinite is fine), `M2` symmetric positive
/// semidefinite. A singular `M2` is handled by solving on `range(M2)`:
/// eigen-decompose the equilibrated `M2`, drop eigenvalues at or below
/// `1e-12` of the largest, restrict `M1` to the kept directions.
pub fn gen_sym_eig(
    m1: &SparseMatrix,
    m2: &SparseMatrix,
    mode: PencilMode,
) -> Result<EigenPencilResult, LinalgError> {
    if m1.nrows() != m1.ncols() || m2.nrows() != m2.ncols() || m1.nrows() != m2.nrows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "pencil of {}x{} against {}x{}",
            m1.nrows(),
            m1.ncols(),
            m2.nrows(),
            m2.ncols()
        )));
    }
    for (name, m) in [("M1", m1), ("M2", m2)] {
        let scale = m.max_abs().max(1e-300);
        let err = m.symmetry_error();
        if err > SPD_REL_TOL * scale {
            return Err(LinalgError::NotSymmetric {
                err,
                tol: SPD_REL_TOL * scale,
            });
        }
        let _ = name;
    }
    gen_sym_eig_dense(&m1.to_dense(), &m2.to_dense(), mode)
}

pub(crate) fn gen_sym_eig_dense(
    m1: &DMatrix<f64>,
    m2: &DMatrix<f64>,
    mode: PencilMode,
) -> Result<EigenPencilResult, LinalgError> {
    let n = m1.nrows();
    if n > DESK_SCALE_LIMIT {
        return Err(LinalgError::DeskScaleExceeded {
            n,
            limit: DESK_SCALE_LIMIT,
        });
    }
    let d = dense::equilibration(m2);
    let m2s = dense::scale_sym(m2, &d);
    let (w, u) = dense::sym_eig_ascending(&m2s);
    let wmax = w[n - 1].max(0.0);
    if wmax <= 0.0 {
        return Err(LinalgError::EmptyRange);
    }
    if w[0] < -1e-10 * wmax {
        return Err(LinalgError::NotPsd(w[0]));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| w[i] > METRIC_TRUNCATION * wmax).collect();
    if keep.is_empty() {
        return Err(LinalgError::EmptyRange);
    }
    let kernel_dim = n - keep.len();
    // W = D U_+ Lambda_+^{-1/2}, so that W^T M2 W = I
    let mut wmat = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / w[i].sqrt();
        for r in 0..n {
            wmat[(r, c)] = d[r] * u[(r, i)] * s;
        }
    }
    let reduced = wmat.transpose() * m1 * &wmat;
    let reduced = (reduced.clone() + reduced.transpose()) * 0.5;
    let (theta, y) = dense::sym_eig_ascending(&reduced);
    let vectors = &wmat * &y;
    let (eigenvalues, eigenvectors) = match mode {
        PencilMode::Full => (theta.as_slice().to_vec(), vectors),
        PencilMode::Extremal => {
            let k = theta.len();
            let mut v = DMatrix::zeros(n, if k > 1 { 2 } else { 1 });
            v.set_column(0, &vectors.column(0));
            if k > 1 {
                v.set_column(1, &vectors.column(k - 1));
                (vec![theta[0], theta[k - 1]], v)
            } else {
                (vec![theta[0]], v)
            }
        }
    };
    Ok(EigenPencilResult {
        eigenvalues,
        eigenvectors,
        kernel_dim,
        mode,
    })
}

impl EigenPencilResult {
    /// Largest residual `|M1 x - theta M2 x| / ((|M1| + |theta||M2|)|x|)`
    /// over the returned pairs; tests assert this stays below 1e-8.
    pub fn max_relative_residual(&self, m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> f64 {
        let n1 = m1.amax().max(1e-300);
        let n2 = m2.amax();
        let mut worst: f64 = 0.0;
        for (k, &theta) in self.eigenvalues.iter().enumerate() {
            let x = DVector::from_column_slice(self.eigenvectors.column(k).as_slice());
            let r = m1 * &x - (m2 * &x) * theta;
            let denom = (n1 + theta.abs() * n2) * x.norm().max(1e-300);
            worst = worst.max(r.norm() / denom);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SparseMatrix {
        let t: Vec<(usize, usize, f64)> = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, i, x))
            .collect();
        let mut m = SparseMatrix::from_triplets(v.len(), v.len(), &t).unwrap();
        m = m.flag_symmetric().unwrap();
        m
    }

    #[test]
    fn identity_pencil() {
        let i4 = SparseMatrix::identity(4);
        let r = gen_sym_eig(&i4, &i4, PencilMode::Full).unwrap();
        assert_eq!(r.kernel_dim, 0);
        for &t in &r.eigenvalues {
            assert!((t - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_pencil() {
        let r = gen_sym_eig(&diag(&[2.0, 3.0]), &SparseMatrix::identity(2), PencilMode::Full)
            .unwrap();
        assert!((r.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_metric_restricts() {
        // M1 = diag(1,1,5), M2 = diag(1,1,0): restriction is the 2x2 identity block
        let r = gen_sym_eig(&diag(&[1.0, 1.0, 5.0]), &diag(&[1.0, 1.0, 0.0]), PencilMode::Full)
            .unwrap();
        assert_eq!(r.kernel_dim, 1);
        assert_eq!(r.eigenvalues.len(), 2);
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_metric_is_empty_range() {
        let z = SparseMatrix::zeros(3, 3);
        match gen_sym_eig(&diag(&[1.0, 2.0, 3.0]), &z, PencilMode::Full) {
            Err(LinalgError::EmptyRange) => {}
            other => panic!("expected EmptyRange, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = SparseMatrix::identity(3);
        let b = SparseMatrix::identity(4);
        assert!(matches!(
            gen_sym_eig(&a, &b, PencilMode::Full),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn extremal_returns_min_max() {
        let r = gen_sym_eig(
            &diag(&[4.0, -1.0, 2.0]),
            &SparseMatrix::identity(3),
            PencilMode::Extremal,
        )
        .unwrap();
        assert_eq!(r.eigenvalues, vec![-1.0, 4.0]);
    }

    #[test]
    fn desk_scale_guard() {
        let n = DESK_SCALE_LIMIT + 1;
        let m1 = DMatrix::<f64>::identity(n, n);
        let m2 = DMatrix::<f64>::identity(n, n);
        assert!(matches!(
            gen_sym_eig_dense(&m1, &m2, PencilMode::Full),
            Err(LinalgError::DeskScaleExceeded { .. })
        ));
    }
}
