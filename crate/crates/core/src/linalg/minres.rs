//! Preconditioned MinRes for symmetric, possibly indefinite systems.

use nalgebra::DVector;

use super::LinalgError;

const BREAKDOWN_REL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct MinresResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Final preconditioned residual relative to the initial one.
    pub rel_residual: f64,
    pub converged: bool,
}

/// Paige–Saunders MinRes with an SPD preconditioner callback.
///
/// Stops when the preconditioned residual drops below `rel_tol` times its
/// initial value, or after `max_iter` iterations with `converged = false`.
/// A Lanczos beta underflowing `1e-14` of the initial residual norm without
/// convergence reports `BreakdownDetected`.
pub fn minres<Fa, Fp>(
    apply_a: Fa,
    apply_pinv: Fp,
    rhs: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<MinresResult, LinalgError>
where
    Fa: Fn(&DVector<f64>) -> DVector<f64>,
    Fp: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = rhs.len();
    let mut x = DVector::zeros(n);

    let mut r1 = rhs.clone();
    let mut y = apply_pinv(&r1);
    let beta1_sq = r1.dot(&y);
    if beta1_sq < 0.0 {
        return Err(LinalgError::NotPsd(beta1_sq));
    }
    let beta1 = beta1_sq.sqrt();
    if beta1 == 0.0 {
        return Ok(MinresResult {
            x,
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        });
    }

    let mut r2 = r1.clone();
    let mut beta = beta1;
    let mut oldb = 0.0;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs: f64 = -1.0;
    let mut sn: f64 = 0.0;
    let mut w = DVector::zeros(n);
    let mut w2 = DVector::zeros(n);

    let mut rel = 1.0;
    for it in 1..=max_iter {
        let s = 1.0 / beta;
        let v = &y * s;
        y = apply_a(&v);
        if it >= 2 {
            y -= &r1 * (beta / oldb);
        }
        let alfa = v.dot(&y);
        y -= &r2 * (alfa / beta);
        r1 = std::mem::replace(&mut r2, y);
        y = apply_pinv(&r2);
        oldb = beta;
        let beta_sq = r2.dot(&y);
        if beta_sq < 0.0 {
            return Err(LinalgError::NotPsd(beta_sq));
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, w.clone());
        w = (v - &w1 * oldeps - &w2 * delta) / gamma;
        x += &w * phi;

        rel = phibar / beta1;
        if rel <= rel_tol {
            return Ok(MinresResult {
                x,
                iterations: it,
                rel_residual: rel,
                converged: true,
            });
        }
        if beta <= BREAKDOWN_REL * beta1 {
            // Krylov space exhausted; anything left is a genuine breakdown
            return Err(LinalgError::BreakdownDetected {
                beta,
                threshold: BREAKDOWN_REL * beta1,
                rel_residual: rel,
            });
        }
    }
    Ok(MinresResult {
        x,
        iterations: max_iter,
        rel_residual: rel,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn ident(v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }

    #[test]
    fn identity_system_one_iteration() {
        let mut e1 = DVector::zeros(4);
        e1[0] = 1.0;
        let r = minres(ident, ident, &e1, 1e-12, 50).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!((r.x - e1).norm() < 1e-12);
    }

    #[test]
    fn diagonal_indefinite_two_iterations() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let rhs = DVector::from_vec(vec![1.0, 1.0]);
        let r = minres(|v| &a * v, ident, &rhs, 1e-12, 50).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert!((r.x[0] - 1.0).abs() < 1e-10 && (r.x[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_rhs_trivial() {
        let r = minres(ident, ident, &DVector::zeros(3), 1e-12, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn max_iter_reports_unconverged() {
        // 1D system with a hopeless iteration cap is fine; use a 30x30 Laplacian-ish
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = crate::linalg::SparseMatrix::from_triplets(n, n, &t).unwrap();
        let rhs = DVector::from_element(n, 1.0);
        let r = minres(|v| a.matvec(v), ident, &rhs, 1e-14, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(r.rel_residual > 0.0);
    }
}
