//! Brute-force reference routines for cross-checking the main kernels.
//!
//! Everything here is deliberately naive: cyclic Jacobi for symmetric
//! eigenproblems, textbook Cholesky for the pencil reduction, partial-pivot
//! LU for dense solves. nalgebra is used only as a matrix container; none of
//! its factorizations are called, so these routes stay independent of the
//! paths they check.

use nalgebra::{DMatrix, DVector};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
/// ascending order and the matching eigenvector columns.
pub fn jacobi_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "jacobi_eig needs a square matrix");
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let eps = 1e-15 * off_norm(&a).max(1e-300);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= eps {
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &v.column(i));
    }
    (vals, vecs)
}

fn off_norm(a: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Textbook dense Cholesky, `M = L L^T`. Returns `None` if a pivot is not
/// strictly positive.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return None;
        }
        l[(j, j)] = d.sqrt();
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    Some(l)
}

fn forward_sub(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let t = x[k];
            x[i] -= l[(i, k)] * t;
        }
        x[i] /= l[(i, i)];
    }
    x
}

fn backward_sub_t(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    // solves L^T x = b
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = x[k];
            x[i] -= l[(k, i)] * t;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Generalized symmetric eigenvalues of `M1 x = theta M2 x` for SPD `M2`,
/// via the reduction `L^{-1} M1 L^{-T}` with `M2 = L L^T` and Jacobi on the
/// reduced matrix. Ascending.
pub fn gen_eig_spd(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Vec<f64> {
    let n = m1.nrows();
    let l = cholesky_lower(m2).expect("oracle pencil metric must be SPD");
    let mut reduced = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let col = DVector::from_column_slice(m1.column(j).as_slice());
        reduced.set_column(j, &forward_sub(&l, &col));
    }
    let red_t = reduced.transpose();
    for j in 0..n {
        let col = DVector::from_column_slice(red_t.column(j).as_slice());
        reduced.set_column(j, &forward_sub(&l, &col));
    }
    // reduced = L^{-1} M1 L^{-T}; symmetrize roundoff
    let sym = (reduced.clone() + reduced.transpose()) * 0.5;
    jacobi_eig(&sym).0
}

/// Solve `M x = b` for dense square `M` by partial-pivot LU.
pub fn lu_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut x = b.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pmax = k;
        for i in (k + 1)..n {
            if a[(i, k)].abs() > a[(pmax, k)].abs() {
                pmax = i;
            }
        }
        if pmax != k {
            a.swap_rows(k, pmax);
            piv.swap(k, pmax);
            let t = x[k];
            x[k] = x[pmax];
            x[pmax] = t;
        }
        let akk = a[(k, k)];
        assert!(akk.abs() > 1e-300, "oracle LU hit a zero pivot");
        for i in (k + 1)..n {
            let f = a[(i, k)] / akk;
            a[(i, k)] = f;
            for j in (k + 1)..n {
                let t = a[(k, j)];
                a[(i, j)] -= f * t;
            }
            let t = x[k];
            x[i] -= f * t;
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let t = x[j];
            x[i] -= a[(i, j)] * t;
        }
        x[i] /= a[(i, i)];
    }
    x
}

/// Singular values of `G` (descending) via Jacobi on the smaller Gram matrix.
pub fn singular_values(g: &DMatrix<f64>) -> Vec<f64> {
    let gram = if g.nrows() <= g.ncols() {
        g * g.transpose()
    } else {
        g.transpose() * g
    };
    let (vals, _) = jacobi_eig(&gram);
    let mut s: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// Solve `L^T x = b` against the factor from [`cholesky_lower`]; exposed for
/// pencil witnesses in tests.
pub fn chol_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    backward_sub_t(l, &forward_sub(l, b))
}

/// Columnwise forward substitution, `L^{-1} B`.
pub fn forward_substitute(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(b.nrows(), b.ncols());
    for j in 0..b.ncols() {
        let col = DVector::from_column_slice(b.column(j).as_slice());
        out.set_column(j, &forward_sub(l, &col));
    }
    out
}

/// Columnwise dense solve `M^{-1} B` by LU.
pub fn lu_solve_mat(m: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(b.nrows(), b.ncols());
    for j in 0..b.ncols() {
        let col = DVector::from_column_slice(b.column(j).as_slice());
        out.set_column(j, &lu_solve(m, &col));
    }
    out
}
