//! Stability constants, the explicit witness construction, and the chain
//! check connecting them.
//!
//! The hypotheses are quantified by three pencil computations: coercivity
//! `a(v,v) >= C_a_under |v|_V^2` from the pencil `(A, S_V)`, continuity
//! `C_a_bar` from `(A, Vbar)`, and the small inf-sup constant from
//! `(B Vbar^{-1} B^T, S_Q)` on `range(S_Q)`. The well-posedness constants
//! `(alpha_under, C_bar)` come from the full block pencil against the
//! combined metric. Whenever the hypotheses hold, the witness construction
//! certifies `alpha_under >= (1/4) / sqrt(2 max(delta^2+1, beta^-2+delta^2))`
//! with `delta = max(C_a_under^{-1}/4 + C_a_bar beta^{-2}, 3/4)`.

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::{gen_sym_eig_dense, LinalgError, PencilMode};
use crate::saddle::{
    block_form, combined_norm, BlockSystem, CombinedVector, FittedNorms,
    SaddleError,
};

/// Slack for the machine-checked chain inequality `alpha >= bound - CHAIN_TOL`.
pub const CHAIN_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Saddle(#[from] SaddleError),
}

/// Every constant of the stability statement for one assembled instance.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Continuity constant of a(.,.) in the fitted V-norm.
    pub c_a_bar: f64,
    /// Coercivity constant of a(.,.) against the V-seminorm.
    pub c_a_under: f64,
    /// Small inf-sup constant against the Q-seminorm.
    pub beta_under: f64,
    /// Inf-sup constant of the block operator in the combined norm.
    pub alpha_under: f64,
    /// Continuity constant of the block operator in the combined norm.
    pub c_bar: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub theoretical_alpha_bound: f64,
    /// True when the coercivity and small inf-sup hypotheses hold.
    pub hypotheses_ok: bool,
    /// True when `alpha_under >= theoretical_alpha_bound - 1e-8` (vacuous
    /// when the hypotheses fail).
    pub chain_ok: bool,
    pub param_label: String,
    pub mesh_level: usize,
}

/// `C_a_under`: smallest Rayleigh quotient of `(A, S_V)` on `range(S_V)`.
pub fn coercivity_constant(
    sys: &BlockSystem,
    norms: &FittedNorms,
) -> Result<f64, AnalysisError> {
    let r = gen_sym_eig_dense(&sys.a.to_dense(), &norms.s_v, PencilMode::Extremal)?;
    Ok(r.eigenvalues[0])
}

/// `C_a_bar`: largest Rayleigh quotient of `(A, Vbar)`.
pub fn continuity_constant_a(
    sys: &BlockSystem,
    norms: &FittedNorms,
) -> Result<f64, AnalysisError> {
    let r = gen_sym_eig_dense(&sys.a.to_dense(), &norms.vbar, PencilMode::Extremal)?;
    Ok(*r.eigenvalues.last().unwrap())
}

/// `beta_under`: square root of the smallest Rayleigh quotient of
/// `(B Vbar^{-1} B^T, S_Q)` on `range(S_Q)`. A zero coupling yields 0,
/// which is reported, not raised.
pub fn small_inf_sup(sys: &BlockSystem, norms: &FittedNorms) -> Result<f64, AnalysisError> {
    let b = sys.b.to_dense();
    let x = &b * norms.vbar_solve_mat(&b.transpose());
    let x = (x.clone() + x.transpose()) * 0.5;
    let r = gen_sym_eig_dense(&x, &norms.s_q, PencilMode::Extremal)?;
    Ok(r.eigenvalues[0].max(0.0).sqrt())
}

/// `(alpha_under, C_bar)`: extreme |eigenvalues| of the block pencil
/// against the combined metric.
pub fn babuska_constants(
    sys: &BlockSystem,
    norms: &FittedNorms,
) -> Result<(f64, f64), AnalysisError> {
    let pencil = gen_sym_eig_dense(
        &sys.block_dense(),
        &norms.combined_metric(),
        PencilMode::Full,
    )?;
    let alpha = pencil
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &t| m.min(t.abs()));
    let c_bar = pencil.eigenvalues.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
    Ok((alpha, c_bar))
}

/// Proof constants: `epsilon = beta^2 / (2 C_a_bar)`,
/// `delta = max(1/(4 C_a_under) + C_a_bar / beta^2, 3/4)`, and the certified
/// lower bound `(1/4) / sqrt(2 max(delta^2 + 1, beta^-2 + delta^2))`.
pub fn proof_constants(
    c_a_bar: f64,
    c_a_under: f64,
    beta_under: f64,
) -> Result<(f64, f64, f64), AnalysisError> {
    if !(c_a_under > 0.0) || !(beta_under > 0.0) {
        return Err(AnalysisError::HypothesisFailed(format!(
            "need C_a_under > 0 and beta_under > 0, got {c_a_under:e} and {beta_under:e}"
        )));
    }
    let epsilon = 0.5 * beta_under * beta_under / c_a_bar;
    let delta = (0.25 / c_a_under + c_a_bar / (beta_under * beta_under)).max(0.75);
    let cap_sq = 2.0 * (delta * delta + 1.0).max(1.0 / (beta_under * beta_under) + delta * delta);
    let bound = 0.25 / cap_sq.sqrt();
    Ok((bound, epsilon, delta))
}

/// The certified lower bound for a finished report.
pub fn theoretical_bound(report: &StabilityReport) -> Result<f64, AnalysisError> {
    proof_constants(report.c_a_bar, report.c_a_under, report.beta_under).map(|(b, _, _)| b)
}

/// The witness pair and the two inequalities it certifies.
#[derive(Debug, Clone)]
pub struct WitnessResult {
    pub input: CombinedVector,
    pub constructed: CombinedVector,
    /// `A((u;p),(v;q)) / |(u;p)|_Y^2`, certified `>= 1/4`.
    pub coercivity_ratio: f64,
    /// `|(v;q)|_Y / |(u;p)|_Y`, certified `<= boundedness_cap`.
    pub boundedness_ratio: f64,
    pub coercivity_floor: f64,
    pub boundedness_cap: f64,
}

impl WitnessResult {
    pub fn passes(&self, tol: f64) -> bool {
        self.coercivity_ratio >= self.coercivity_floor - tol
            && self.boundedness_ratio <= self.boundedness_cap + tol
    }
}

/// Run the proof's explicit construction on one vector:
/// `v = delta u + u0`, `q = -delta p + Qbar^{-1} B u`, where `u0` is the
/// scaled supremizer `s Vbar^{-1} B^T p` with `s = |p|_Q^2 / (p' B Vbar^{-1} B^T p)`,
/// so that `b(u0, p) = |p|_Q^2` exactly and `|u0|_V <= beta^{-1} |p|_Q`.
pub fn witness_check(
    sys: &BlockSystem,
    norms: &FittedNorms,
    report: &StabilityReport,
    x: &CombinedVector,
) -> Result<WitnessResult, AnalysisError> {
    if !report.hypotheses_ok {
        return Err(AnalysisError::HypothesisFailed(
            "witness construction needs positive coercivity and inf-sup constants".into(),
        ));
    }
    let ny = combined_norm(norms, x);
    if ny == 0.0 {
        return Err(AnalysisError::HypothesisFailed(
            "witness input must be nonzero".into(),
        ));
    }
    let delta = report.delta;
    let sq_p = &norms.s_q * &x.p;
    let pq2 = x.p.dot(&sq_p);
    let qscale = x.p.dot(&(&norms.qbar * &x.p)).max(1e-300);
    let u0 = if pq2 > 1e-14 * qscale {
        let bp = sys.b.matvec_transpose(&x.p);
        let vinv_bp = norms.vbar_solve(&bp);
        let denom = bp.dot(&vinv_bp);
        if denom <= 0.0 {
            return Err(AnalysisError::HypothesisFailed(
                "supremizer denominator vanished despite |p|_Q > 0".into(),
            ));
        }
        vinv_bp * (pq2 / denom)
    } else {
        DVector::zeros(sys.n_v())
    };
    let v = &x.u * delta + u0;
    let p0 = norms.qbar_solve(&sys.b.matvec(&x.u));
    let q = p0 - &x.p * delta;
    let y = CombinedVector { u: v, p: q };
    let form = block_form(sys, x, &y);
    let coercivity_ratio = form / (ny * ny);
    let boundedness_ratio = combined_norm(norms, &y) / ny;
    let beta = report.beta_under;
    let cap_sq =
        2.0 * (delta * delta + 1.0).max(1.0 / (beta * beta) + delta * delta);
    Ok(WitnessResult {
        input: x.clone(),
        constructed: y,
        coercivity_ratio,
        boundedness_ratio,
        coercivity_floor: 0.25,
        boundedness_cap: cap_sq.sqrt(),
    })
}

/// Compute every constant and the chain flags for one instance.
/// Hypothesis failures are flagged in the report, never raised.
pub fn verify_theorem5(
    sys: &BlockSystem,
    norms: &FittedNorms,
    mesh_level: usize,
    param_label: impl Into<String>,
) -> Result<StabilityReport, AnalysisError> {
    let c_a_bar = continuity_constant_a(sys, norms)?;
    let c_a_under = match coercivity_constant(sys, norms) {
        Ok(v) => v,
        Err(AnalysisError::Linalg(LinalgError::EmptyRange)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let beta_under = match small_inf_sup(sys, norms) {
        Ok(v) => v,
        Err(AnalysisError::Linalg(LinalgError::EmptyRange)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let (alpha_under, c_bar) = babuska_constants(sys, norms)?;
    let hypotheses_ok = c_a_under > 0.0 && beta_under > 0.0;
    let (bound, epsilon, delta) = if hypotheses_ok {
        proof_constants(c_a_bar, c_a_under, beta_under)?
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let chain_ok = !hypotheses_ok || alpha_under >= bound - CHAIN_TOL;
    Ok(StabilityReport {
        c_a_bar,
        c_a_under,
        beta_under,
        alpha_under,
        c_bar,
        epsilon,
        delta,
        theoretical_alpha_bound: bound,
        hypotheses_ok,
        chain_ok,
        param_label: param_label.into(),
        mesh_level,
    })
}

/// Sample `count` standard-normal combined vectors and run the witness
/// construction on each; returns the worst ratios observed.
pub fn witness_sweep(
    sys: &BlockSystem,
    norms: &FittedNorms,
    report: &StabilityReport,
    count: usize,
    seed: u64,
) -> Result<Vec<WitnessResult>, AnalysisError> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u = DVector::from_fn(sys.n_v(), |_, _| normal.sample(&mut rng));
        let p = DVector::from_fn(sys.n_q(), |_, _| normal.sample(&mut rng));
        out.push(witness_check(sys, norms, report, &CombinedVector { u, p })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use crate::saddle::build_fitted_norms;

    fn diag(v: &[f64]) -> SparseMatrix {
        let t: Vec<(usize, usize, f64)> = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, i, x))
            .collect();
        SparseMatrix::from_triplets(v.len(), v.len(), &t).unwrap()
    }

    fn scalar_instance(t: f64) -> (BlockSystem, FittedNorms) {
        let one = SparseMatrix::identity(1);
        let sys = BlockSystem::new(one.clone(), one.clone(), one.scale(t), "scalar").unwrap();
        let norms = build_fitted_norms(&sys, &one, &one).unwrap();
        (sys, norms)
    }

    #[test]
    fn coercivity_identity_when_sv_is_a() {
        let (sys, norms) = scalar_instance(0.0);
        assert!((coercivity_constant(&sys, &norms).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coercivity_diagonal() {
        let a = diag(&[2.0, 5.0]);
        let b = SparseMatrix::zeros(1, 2);
        let c = SparseMatrix::identity(1);
        let sys = BlockSystem::new(a, b, c, "diag").unwrap();
        let norms =
            build_fitted_norms(&sys, &SparseMatrix::identity(1), &SparseMatrix::identity(2))
                .unwrap();
        assert!((coercivity_constant(&sys, &norms).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn continuity_scalar_half() {
        let (sys, norms) = scalar_instance(0.0);
        assert!((continuity_constant_a(&sys, &norms).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn small_inf_sup_scalar() {
        let (sys, norms) = scalar_instance(0.0);
        let beta = small_inf_sup(&sys, &norms).unwrap();
        assert!((beta - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn small_inf_sup_zero_coupling_reports_zero() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::zeros(2, 2);
        let c = SparseMatrix::identity(2);
        let sys = BlockSystem::new(a, b, c, "b0").unwrap();
        let norms =
            build_fitted_norms(&sys, &SparseMatrix::identity(2), &SparseMatrix::identity(2))
                .unwrap();
        assert_eq!(small_inf_sup(&sys, &norms).unwrap(), 0.0);
    }

    #[test]
    fn babuska_scalar_hand_pencil() {
        // A = [[1,1],[1,0]], N = diag(2,1): 2 th^2 - th - 1 = 0, th in {1, -1/2}
        let (sys, norms) = scalar_instance(0.0);
        let (alpha, cbar) = babuska_constants(&sys, &norms).unwrap();
        assert!((alpha - 0.5).abs() < 1e-13);
        assert!((cbar - 1.0).abs() < 1e-13);
    }

    #[test]
    fn babuska_no_constraint_block() {
        let a = SparseMatrix::identity(3);
        let b = SparseMatrix::zeros(0, 3);
        let c = SparseMatrix::zeros(0, 0);
        let sys = BlockSystem::new(a, b, c, "unconstrained").unwrap();
        let norms = build_fitted_norms(
            &sys,
            &SparseMatrix::zeros(0, 0),
            &SparseMatrix::identity(3),
        )
        .unwrap();
        let (alpha, cbar) = babuska_constants(&sys, &norms).unwrap();
        assert!((alpha - 1.0).abs() < 1e-13 && (cbar - 1.0).abs() < 1e-13);
    }

    #[test]
    fn babuska_scaling_invariance() {
        let (sys, norms) = scalar_instance(0.0);
        let (a1, c1) = babuska_constants(&sys, &norms).unwrap();
        let s = 37.5;
        let sys2 = BlockSystem::new(
            sys.a.scale(s),
            sys.b.scale(s),
            sys.c.scale(s),
            "scaled",
        )
        .unwrap();
        let norms2 = build_fitted_norms(
            &sys2,
            &SparseMatrix::from_dense(&(norms.s_q.clone() * s)),
            &SparseMatrix::from_dense(&(norms.s_v.clone() * s)),
        )
        .unwrap();
        let (a2, c2) = babuska_constants(&sys2, &norms2).unwrap();
        assert!((a1 - a2).abs() < 1e-12 && (c1 - c2).abs() < 1e-12);
    }

    #[test]
    fn proof_constants_reference_values() {
        let (bound, eps, delta) = proof_constants(1.0, 1.0, 1.0).unwrap();
        assert!((delta - 1.25).abs() < 1e-15);
        assert!((eps - 0.5).abs() < 1e-15);
        assert!((bound - 0.25 / (2.0f64 * 2.5625).sqrt()).abs() < 1e-15);
        assert!((bound - 0.110431526074847).abs() < 1e-12);
    }

    #[test]
    fn proof_constants_large_beta_limit() {
        let (bound, _, delta) = proof_constants(1.0, 1.0, 1e8).unwrap();
        assert!((delta - 0.75).abs() < 1e-7);
        let expect = 0.25 / (2.0f64 * (0.5625 + 1.0)).sqrt();
        assert!((bound - expect).abs() < 1e-8);
    }

    #[test]
    fn bound_never_exceeds_quarter() {
        for &(cb, cu, be) in &[
            (1.0, 1.0, 1.0),
            (2.5, 0.3, 0.1),
            (1.0, 1.0, 1e8),
            (7.0, 2.0, 12.0),
        ] {
            let (bound, _, _) = proof_constants(cb, cu, be).unwrap();
            assert!(bound <= 0.25 / 2.0f64.sqrt() + 1e-15);
        }
    }

    #[test]
    fn hypothesis_failure_is_error() {
        assert!(proof_constants(1.0, 0.0, 1.0).is_err());
        assert!(proof_constants(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn verify_scalar_chain() {
        let (sys, norms) = scalar_instance(0.0);
        let r = verify_theorem5(&sys, &norms, 0, "scalar t=0").unwrap();
        assert!(r.hypotheses_ok);
        assert!(r.chain_ok);
        assert!(r.alpha_under <= r.c_bar);
        assert!(r.theoretical_alpha_bound <= r.alpha_under + CHAIN_TOL);
    }

    #[test]
    fn witness_scalar_hand_construction() {
        // 1-D algebra oracle: A=B=1, C=0, S=1 so Qbar=1, Vbar=2, beta^2=1/2,
        // C_a_bar=1/2, C_a_under=1, delta = max(1/4 + 1/2/(1/2), 3/4) = 5/4.
        let (sys, norms) = scalar_instance(0.0);
        let r = verify_theorem5(&sys, &norms, 0, "scalar").unwrap();
        assert!((r.delta - 1.25).abs() < 1e-14);
        let x = CombinedVector {
            u: DVector::from_vec(vec![1.0]),
            p: DVector::from_vec(vec![1.0]),
        };
        let w = witness_check(&sys, &norms, &r, &x).unwrap();
        // by hand: u0 = s*Vbar^{-1}*B*p with s = (p S p)/(p B Vbar^{-1} B p) = 1/(1/2) = 2
        // so u0 = 1, v = delta + 1 = 2.25, p0 = Qbar^{-1} B u = 1, q = 1 - delta = -0.25
        let a_form = 1.0 * 2.25 + 2.25 * 1.0 + 1.0 * (-0.25) - 0.0;
        let ny2 = 2.0 + 1.0;
        assert!((w.coercivity_ratio - a_form / ny2).abs() < 1e-14);
        assert!(w.passes(1e-10));
    }

    #[test]
    fn witness_zero_pressure_branch() {
        let (sys, norms) = scalar_instance(0.0);
        let r = verify_theorem5(&sys, &norms, 0, "scalar").unwrap();
        let x = CombinedVector {
            u: DVector::from_vec(vec![1.0]),
            p: DVector::from_vec(vec![0.0]),
        };
        let w = witness_check(&sys, &norms, &r, &x).unwrap();
        assert!(w.passes(1e-10));
        // u0 = 0 branch: v = delta*u
        assert!((w.constructed.u[0] - r.delta).abs() < 1e-14);
    }

    #[test]
    fn witness_rejects_zero_vector() {
        let (sys, norms) = scalar_instance(0.0);
        let r = verify_theorem5(&sys, &norms, 0, "scalar").unwrap();
        let x = CombinedVector::zeros(1, 1);
        assert!(witness_check(&sys, &norms, &r, &x).is_err());
    }

    #[test]
    fn trivial_splitting_flags_without_crashing() {
        // S_Q = 0 with C SPD: beta is not applicable, Babuska still computed
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]).unwrap();
        let c = SparseMatrix::identity(1).scale(2.0);
        let sys = BlockSystem::new(a, b, c, "trivial").unwrap();
        let norms = build_fitted_norms(
            &sys,
            &SparseMatrix::zeros(1, 1),
            &SparseMatrix::identity(2),
        )
        .unwrap();
        let r = verify_theorem5(&sys, &norms, 0, "trivial").unwrap();
        assert!(!r.hypotheses_ok);
        assert!(r.beta_under.is_nan());
        assert!(r.alpha_under > 0.0);
        assert!(r.chain_ok); // vacuous
    }
}
