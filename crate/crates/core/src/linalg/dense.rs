//! Internal dense helpers: equilibration and sorted symmetric eigensolves.

use nalgebra::{DMatrix, DVector};

/// Symmetric diagonal equilibration scale `d` with `d_i = 1/sqrt(|M_ii|)`
/// (1 where the diagonal vanishes). Conjugating by `diag(d)` brings the
/// diagonal to unit size, which keeps factorizations and spectral cutoffs
/// meaningful for the extreme parameter scalings the sweeps produce.
pub fn equilibration(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut d = DVector::from_element(n, 1.0);
    for i in 0..n {
        let a = m[(i, i)].abs();
        if a > 0.0 {
            d[i] = 1.0 / a.sqrt();
        }
    }
    d
}

pub fn scale_sym(m: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut s = m.clone();
    for i in 0..n {
        for j in 0..m.ncols() {
            s[(i, j)] *= d[i] * d[j];
        }
    }
    s
}

/// Eigendecomposition of a symmetric matrix with eigenvalues ascending and
/// matching eigenvector columns.
pub fn sym_eig_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sym.eigenvalues[i]
            .partial_cmp(&sym.eigenvalues[j])
            .unwrap()
    });
    let mut vals = DVector::zeros(n);
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vals[k] = sym.eigenvalues[i];
        vecs.set_column(k, &sym.eigenvectors.column(i));
    }
    (vals, vecs)
}
