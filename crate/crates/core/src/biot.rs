//! Builders assembling the seven poromechanics example problems into
//! block systems with their fitted-norm recipes.
//!
//! Space choices (the element pairs satisfy the relevant discrete inf-sup
//! conditions on this mesh family):
//!
//! 1. mixed Poisson: RT0 x P0, no boundary conditions
//! 2. Stokes-Darcy style: P2 vector (Dirichlet) x P1 mean-zero
//! 3. two-field Biot: P2 vector (Dirichlet) x P1 (Dirichlet)
//! 4. three-field Biot: P2 vector x (P1 mean-zero, P1 Dirichlet)
//! 5. total-pressure three-field: P2 vector x (P1, P1 Dirichlet)
//! 6. four-field Biot: (P2 vector, RT0) x (P0 mean-zero)^2
//! 7. classical three-field: (P2 vector, RT0) x P0 mean-zero
//!
//! Genuinely mean-constrained pressure spaces (examples 2, 6, 7) are reduced
//! onto an explicit basis of the mean-zero subspace so that `Qbar` stays SPD;
//! mean-zero projections that appear only inside seminorms (examples 4, 5)
//! use the L2 projector and keep the coefficient space full-sized.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::fem::{
    apply_essential_bc, assemble, build_space, mass_matrix, mean_zero_basis,
    mean_zero_projector, FESpace, Family, FemError, FormKind, FormSpec,
};
use crate::linalg::{LinalgError, PencilMode, SparseMatrix};
use crate::mesh::build_unit_square_mesh;
use crate::saddle::{build_fitted_norms, BlockSystem, FittedNorms, SaddleError};

#[derive(Debug, Error)]
pub enum BiotError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Saddle(#[from] SaddleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Physical and scaled parameters shared by the examples. Derived fields
/// are computed from the primitives on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleParams {
    /// Perturbation weight of example 1.
    pub t: f64,
    /// Hydraulic conductivity (scaled).
    pub kappa: f64,
    /// Scaled Lame coefficient.
    pub lambda: f64,
    /// Shear modulus.
    pub mu: f64,
    /// Storage coefficient.
    pub c0: f64,
    /// Biot-Willis coefficient.
    pub alpha: f64,
    /// Time-step size.
    pub tau: f64,
    /// Q-seminorm weight of example 3; defaults to `alpha^2 / (1 + lambda)`.
    pub eta: Option<f64>,
}

impl Default for ExampleParams {
    fn default() -> Self {
        Self {
            t: 0.0,
            kappa: 1.0,
            lambda: 1.0,
            mu: 1.0,
            c0: 1.0,
            alpha: 1.0,
            tau: 1.0,
            eta: None,
        }
    }
}

impl ExampleParams {
    pub fn eta_or_default(&self) -> f64 {
        self.eta
            .unwrap_or(self.alpha * self.alpha / (1.0 + self.lambda))
    }

    /// `lambda / (2 mu)`.
    pub fn lambda_mu(&self) -> f64 {
        self.lambda / (2.0 * self.mu)
    }

    /// `R_p = alpha^2 / (tau kappa)`.
    pub fn r_p(&self) -> f64 {
        self.alpha * self.alpha / (self.tau * self.kappa)
    }

    /// `alpha_p = c0 / alpha^2`.
    pub fn alpha_p(&self) -> f64 {
        self.c0 / (self.alpha * self.alpha)
    }

    /// Primitives realizing given example-7 parameters
    /// (with `mu = 1/2`, `alpha = 1`, `tau = 1`).
    pub fn for_ex7(lambda_mu: f64, r_p: f64, alpha_p: f64) -> Self {
        Self {
            lambda: lambda_mu,
            mu: 0.5,
            alpha: 1.0,
            tau: 1.0,
            kappa: 1.0 / r_p,
            c0: alpha_p,
            ..Self::default()
        }
    }
}

/// A fully assembled example instance.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub example_id: u8,
    pub level: usize,
    pub system: BlockSystem,
    pub norms: FittedNorms,
    pub params: ExampleParams,
}

/// Canonical parameter label (fixed order per example, `{:e}` floats).
pub fn param_label(example_id: u8, p: &ExampleParams) -> String {
    match example_id {
        1 => format!("t={:e}", p.t),
        2 => format!("kappa={:e}", p.kappa),
        3 => format!(
            "lambda={:e};c0={:e};kappa={:e};alpha={:e};eta={:e}",
            p.lambda,
            p.c0,
            p.kappa,
            p.alpha,
            p.eta_or_default()
        ),
        4 => format!("lambda={:e};c0={:e};kappa={:e}", p.lambda, p.c0, p.kappa),
        5 => format!(
            "lambda={:e};c0={:e};kappa={:e};alpha={:e}",
            p.lambda, p.c0, p.kappa, p.alpha
        ),
        6 => format!(
            "mu={:e};lambda={:e};tau={:e};kappa={:e};c0={:e};alpha={:e}",
            p.mu, p.lambda, p.tau, p.kappa, p.c0, p.alpha
        ),
        7 => format!(
            "lambda_mu={:e};r_p={:e};alpha_p={:e}",
            p.lambda_mu(),
            p.r_p(),
            p.alpha_p()
        ),
        _ => String::from("unknown"),
    }
}

fn require(cond: bool, msg: &str) -> Result<(), BiotError> {
    if cond {
        Ok(())
    } else {
        Err(BiotError::InvalidParams(msg.to_string()))
    }
}

fn sym_sparse(d: &DMatrix<f64>) -> SparseMatrix {
    let s = (d + d.transpose()) * 0.5;
    SparseMatrix::from_dense(&s)
}

fn blockdiag2(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    let mut m = DMatrix::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let mut m = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    m
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    m.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    m
}

fn form(kind: FormKind, coeff: f64, trial: &FESpace, test: &FESpace) -> Result<SparseMatrix, FemError> {
    assemble(&FormSpec {
        kind,
        coeff,
        trial,
        test,
    })
}

/// Embedding of a Dirichlet-reduced space into its full coefficient space.
fn embedding(full_ndof: usize, space: &FESpace) -> SparseMatrix {
    let free = space.free_dofs();
    let t: Vec<(usize, usize, f64)> = free
        .iter()
        .enumerate()
        .map(|(col, &row)| (row, col, 1.0))
        .collect();
    SparseMatrix::from_triplets(full_ndof, free.len(), &t).unwrap()
}

/// Mixed formulation of a generalized Poisson equation on RT0 x P0.
/// `a = (u,v)`, `b = (div v, q)`, `c = t (p,q)`; both seminorms are the
/// plain L2 norms, so `Qbar = (1+t) M_Q`.
pub fn build_example1(n: usize, t: f64) -> Result<DiscreteProblem, BiotError> {
    require(t >= 0.0, "t must be nonnegative")?;
    let mesh = Arc::new(build_unit_square_mesh(n));
    let v = build_space(mesh.clone(), Family::Rt0, false, false)?;
    let q = build_space(mesh, Family::P0, false, false)?;
    let a = form(FormKind::VectorMass, 1.0, &v, &v)?;
    let b = form(FormKind::DivCoupling, 1.0, &v, &q)?;
    let mq = mass_matrix(&q)?;
    let c = mq.scale(t);
    let s_q = mq;
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "RT0 x P0, no essential bc")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 1,
        level: n,
        system,
        norms,
        params: ExampleParams {
            t,
            ..ExampleParams::default()
        },
    })
}

/// Displacement-pressure problem with `c = (kappa grad p, grad q)` on
/// P2 vector (Dirichlet) x P1 mean-zero. The pressure space is reduced onto
/// the mean-zero basis so `Qbar = M + kappa K` stays SPD.
pub fn build_example2(n: usize, kappa: f64) -> Result<DiscreteProblem, BiotError> {
    require(kappa >= 0.0, "kappa must be nonnegative")?;
    let mesh = Arc::new(build_unit_square_mesh(n));
    let v = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let qfull = build_space(mesh, Family::P1, false, true)?;
    let a = apply_essential_bc(&form(FormKind::Stiffness, 1.0, &v, &v)?, Some(&v), Some(&v))?;
    let z = mean_zero_basis(&qfull)?.to_dense();
    let b_full = apply_essential_bc(
        &form(FormKind::DivCoupling, -1.0, &v, &qfull)?,
        None,
        Some(&v),
    )?;
    let b = SparseMatrix::from_dense(&(z.transpose() * b_full.to_dense()));
    let k = form(FormKind::GradGradScalar, 1.0, &qfull, &qfull)?.to_dense();
    let m = mass_matrix(&qfull)?.to_dense();
    let c = sym_sparse(&(z.transpose() * k * &z * kappa));
    let s_q = sym_sparse(&(z.transpose() * m * &z));
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "P2(dirichlet) x P1(zero-mean)")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 2,
        level: n,
        system,
        norms,
        params: ExampleParams {
            kappa,
            ..ExampleParams::default()
        },
    })
}

/// Two-field quasi-static Biot: `a = (eps u, eps v) + lambda (div u, div v)`,
/// `b = -alpha (div v, q)`, `c = c0 (p,q) + kappa (grad p, grad q)` on
/// P2 vector x P1, both Dirichlet. Q-seminorm `eta (q,q)`.
pub fn build_example3(n: usize, params: &ExampleParams) -> Result<DiscreteProblem, BiotError> {
    require(params.lambda >= 0.0, "lambda must be nonnegative")?;
    require(params.c0 >= 0.0, "c0 must be nonnegative")?;
    require(params.kappa >= 0.0, "kappa must be nonnegative")?;
    require(params.alpha > 0.0, "alpha must be positive")?;
    let eta = params.eta_or_default();
    require(eta > 0.0, "eta must be positive")?;
    let mesh = Arc::new(build_unit_square_mesh(n));
    let v = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let qf = build_space(mesh, Family::P1, true, false)?;
    let eps = form(FormKind::EpsEps, 1.0, &v, &v)?;
    let dd = form(FormKind::DivDiv, 1.0, &v, &v)?;
    let a = apply_essential_bc(&eps.add_scaled(params.lambda, &dd)?, Some(&v), Some(&v))?;
    let b = apply_essential_bc(
        &form(FormKind::DivCoupling, -params.alpha, &v, &qf)?,
        Some(&qf),
        Some(&v),
    )?;
    let mq = apply_essential_bc(&mass_matrix(&qf)?, Some(&qf), Some(&qf))?;
    let kq = apply_essential_bc(
        &form(FormKind::GradGradScalar, 1.0, &qf, &qf)?,
        Some(&qf),
        Some(&qf),
    )?;
    let c = mq.scale(params.c0).add_scaled(params.kappa, &kq)?;
    let s_q = mq.scale(eta);
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "P2(dirichlet) x P1(dirichlet)")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 3,
        level: n,
        system,
        norms,
        params: params.clone(),
    })
}

/// Three-field Biot with `(p_S; p_F)` on (P1 mean-zero, P1 Dirichlet).
/// The Q-seminorm realizes the L2 norm of the mean-zero part of
/// `q_S + q_F`, with the solid pressure kept full-sized.
pub fn build_example4(n: usize, params: &ExampleParams) -> Result<DiscreteProblem, BiotError> {
    require(params.lambda > 0.0, "lambda must be positive")?;
    require(params.c0 >= 0.0, "c0 must be nonnegative")?;
    require(params.kappa >= 0.0, "kappa must be nonnegative")?;
    let mesh = Arc::new(build_unit_square_mesh(n));
    let v = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let qs = build_space(mesh.clone(), Family::P1, false, true)?;
    let qf = build_space(mesh, Family::P1, true, false)?;
    let a = apply_essential_bc(&form(FormKind::EpsEps, 1.0, &v, &v)?, Some(&v), Some(&v))?;
    let div_p1 = form(FormKind::DivCoupling, 1.0, &v, &qs)?;
    let bs = apply_essential_bc(&div_p1, None, Some(&v))?.to_dense();
    let bf = apply_essential_bc(&div_p1, Some(&qf), Some(&v))?.to_dense();
    let b = SparseMatrix::from_dense(&(-vstack(&bs, &bf)));
    let ms = mass_matrix(&qs)?.to_dense();
    let mf = apply_essential_bc(&mass_matrix(&qf)?, Some(&qf), Some(&qf))?;
    let kf = apply_essential_bc(
        &form(FormKind::GradGradScalar, 1.0, &qf, &qf)?,
        Some(&qf),
        Some(&qf),
    )?;
    let c_f = mf.scale(params.c0).add_scaled(params.kappa, &kf)?;
    let c = sym_sparse(&blockdiag2(&(&ms / params.lambda), &c_f.to_dense()));
    let pi = mean_zero_projector(&qs)?.to_dense();
    let emb = embedding(qs.ndof, &qf).to_dense();
    let g = hstack(&pi, &(&pi * emb));
    let s_q = sym_sparse(&(g.transpose() * &ms * &g));
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "P2(dirichlet) x (P1 zero-mean, P1 dirichlet)")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 4,
        level: n,
        system,
        norms,
        params: params.clone(),
    })
}

/// Total-pressure three-field Biot with `(p_T; p_F)` on (P1, P1 Dirichlet).
/// Only the total pressure couples to the displacement; the Q-seminorm is
/// the L2 norm of the mean-zero part of `q_T`.
pub fn build_example5(n: usize, params: &ExampleParams) -> Result<DiscreteProblem, BiotError> {
    require(params.lambda > 0.0, "lambda must be positive")?;
    require(params.c0 >= 0.0, "c0 must be nonnegative")?;
    require(params.kappa >= 0.0, "kappa must be nonnegative")?;
    require(params.alpha >= 0.0, "alpha must be nonnegative")?;
    let (lambda, c0, kappa, alpha) = (params.lambda, params.c0, params.kappa, params.alpha);
    let mesh = Arc::new(build_unit_square_mesh(n));
    let v = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let qt = build_space(mesh.clone(), Family::P1, false, false)?;
    let qf = build_space(mesh, Family::P1, true, false)?;
    let a = apply_essential_bc(&form(FormKind::EpsEps, 1.0, &v, &v)?, Some(&v), Some(&v))?;
    let bt = apply_essential_bc(&form(FormKind::DivCoupling, -1.0, &v, &qt)?, None, Some(&v))?
        .to_dense();
    let nf = qf.free_dofs().len();
    let b = SparseMatrix::from_dense(&vstack(&bt, &DMatrix::zeros(nf, bt.ncols())));
    let mt = mass_matrix(&qt)?.to_dense();
    let mf = apply_essential_bc(&mass_matrix(&qf)?, Some(&qf), Some(&qf))?.to_dense();
    let kf = apply_essential_bc(
        &form(FormKind::GradGradScalar, 1.0, &qf, &qf)?,
        Some(&qf),
        Some(&qf),
    )?
    .to_dense();
    let emb = embedding(qt.ndof, &qf).to_dense();
    let cross = &mt * &emb * (-alpha / lambda);
    let c_tt = &mt / lambda;
    let c_ff = mf * (alpha * alpha / lambda + c0) + kf * kappa;
    let c = sym_sparse(&hstack(
        &vstack(&c_tt, &cross.transpose()),
        &vstack(&cross, &c_ff),
    ));
    let pi = mean_zero_projector(&qt)?.to_dense();
    let s_qt = pi.transpose() * &mt * &pi;
    let s_q = sym_sparse(&blockdiag2(&s_qt, &DMatrix::zeros(nf, nf)));
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "P2(dirichlet) x (P1, P1 dirichlet)")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 5,
        level: n,
        system,
        norms,
        params: params.clone(),
    })
}

/// Four-field Biot with total pressure on (P2 vector, RT0) x (P0 mean-zero)^2.
/// `b = ((div v, q_T), -(div z, q))`; the perturbation couples the two
/// pressures through `lambda^{-1}`.
pub fn build_example6(n: usize, params: &ExampleParams) -> Result<DiscreteProblem, BiotError> {
    require(params.mu > 0.0, "mu must be positive")?;
    require(params.lambda > 0.0, "lambda must be positive")?;
    require(params.tau > 0.0, "tau must be positive")?;
    require(params.kappa > 0.0, "kappa must be positive")?;
    require(params.c0 >= 0.0, "c0 must be nonnegative")?;
    require(params.alpha >= 0.0, "alpha must be nonnegative")?;
    let (mu, lambda, tau, kappa, c0, alpha) =
        (params.mu, params.lambda, params.tau, params.kappa, params.c0, params.alpha);
    let mesh = Arc::new(build_unit_square_mesh(n));
    let vu = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let vw = build_space(mesh.clone(), Family::Rt0, true, false)?;
    let q = build_space(mesh, Family::P0, false, true)?;
    let au = apply_essential_bc(
        &form(FormKind::EpsEps, 2.0 * mu, &vu, &vu)?,
        Some(&vu),
        Some(&vu),
    )?
    .to_dense();
    let aw = apply_essential_bc(
        &form(FormKind::VectorMass, 1.0 / (tau * kappa), &vw, &vw)?,
        Some(&vw),
        Some(&vw),
    )?
    .to_dense();
    let a = sym_sparse(&blockdiag2(&au, &aw));
    let z = mean_zero_basis(&q)?.to_dense();
    let bu = z.transpose()
        * apply_essential_bc(&form(FormKind::DivCoupling, 1.0, &vu, &q)?, None, Some(&vu))?
            .to_dense();
    let bw = z.transpose()
        * apply_essential_bc(&form(FormKind::DivCoupling, -1.0, &vw, &q)?, None, Some(&vw))?
            .to_dense();
    let b = SparseMatrix::from_dense(&blockdiag2(&bu, &bw));
    let mq = z.transpose() * mass_matrix(&q)?.to_dense() * &z;
    let c = sym_sparse(&hstack(
        &vstack(&(&mq / lambda), &(&mq * (alpha / lambda))),
        &vstack(&(&mq * (alpha / lambda)), &(&mq * (c0 + alpha * alpha / lambda))),
    ));
    let s_q = sym_sparse(&blockdiag2(
        &(&mq / (2.0 * mu)),
        &(&mq * (tau * kappa)),
    ));
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "(P2, RT0 dirichlet) x (P0 zero-mean)^2")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 6,
        level: n,
        system,
        norms,
        params: params.clone(),
    })
}

/// Classical three-field Biot on (P2 vector, RT0) x P0 mean-zero with
/// `B = -Div` summing both divergences, `C = alpha_p M`, and Q-seminorm
/// weight `R_p + 1/(1 + lambda_mu)`.
pub fn build_example7(n: usize, params: &ExampleParams) -> Result<DiscreteProblem, BiotError> {
    let (lambda_mu, r_p, alpha_p) = (params.lambda_mu(), params.r_p(), params.alpha_p());
    require(lambda_mu >= 0.0, "lambda_mu must be nonnegative")?;
    require(r_p > 0.0, "R_p must be positive")?;
    require(alpha_p >= 0.0, "alpha_p must be nonnegative")?;
    let mesh = Arc::new(build_unit_square_mesh(n));
    let vu = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let vw = build_space(mesh.clone(), Family::Rt0, true, false)?;
    let q = build_space(mesh, Family::P0, false, true)?;
    let eps = form(FormKind::EpsEps, 1.0, &vu, &vu)?;
    let dd = form(FormKind::DivDiv, 1.0, &vu, &vu)?;
    let au = apply_essential_bc(&eps.add_scaled(lambda_mu, &dd)?, Some(&vu), Some(&vu))?
        .to_dense();
    let aw = apply_essential_bc(
        &form(FormKind::VectorMass, 1.0 / r_p, &vw, &vw)?,
        Some(&vw),
        Some(&vw),
    )?
    .to_dense();
    let a = sym_sparse(&blockdiag2(&au, &aw));
    let z = mean_zero_basis(&q)?.to_dense();
    let bu = z.transpose()
        * apply_essential_bc(&form(FormKind::DivCoupling, -1.0, &vu, &q)?, None, Some(&vu))?
            .to_dense();
    let bw = z.transpose()
        * apply_essential_bc(&form(FormKind::DivCoupling, -1.0, &vw, &q)?, None, Some(&vw))?
            .to_dense();
    let b = SparseMatrix::from_dense(&hstack(&bu, &bw));
    let mq = z.transpose() * mass_matrix(&q)?.to_dense() * &z;
    let c = sym_sparse(&(&mq * alpha_p));
    let s_q = sym_sparse(&(&mq * (r_p + 1.0 / (1.0 + lambda_mu))));
    let s_v = a.clone();
    let system = BlockSystem::new(a, b, c, "(P2, RT0 dirichlet) x P0 zero-mean")?;
    let norms = build_fitted_norms(&system, &s_q, &s_v)?;
    Ok(DiscreteProblem {
        example_id: 7,
        level: n,
        system,
        norms,
        params: params.clone(),
    })
}

/// Dispatch by example id (1 through 7).
pub fn build_example(
    example_id: u8,
    n: usize,
    params: &ExampleParams,
) -> Result<DiscreteProblem, BiotError> {
    match example_id {
        1 => build_example1(n, params.t),
        2 => build_example2(n, params.kappa),
        3 => build_example3(n, params),
        4 => build_example4(n, params),
        5 => build_example5(n, params),
        6 => build_example6(n, params),
        7 => build_example7(n, params),
        other => Err(BiotError::InvalidParams(format!(
            "example id {other} out of range 1-7"
        ))),
    }
}

/// Which pressure space the Stokes reference constant is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StokesPressure {
    /// P0 mean-zero (examples 6 and 7).
    P0ZeroMean,
    /// P1 Dirichlet with the full L2 norm (example 3).
    P1Dirichlet,
}

#[derive(Debug, Clone)]
pub struct ReferenceInfSup {
    /// Darcy constant: RT0 (Dirichlet) against P0 mean-zero, H(div) metric.
    pub beta_d: f64,
    /// Stokes constant: P2 vector (Dirichlet) against the chosen pressure
    /// space, full H1 metric.
    pub beta_s: f64,
    /// Set when a space collapses to dimension zero at this level.
    pub degenerate: bool,
}

/// Classical discrete inf-sup constants on level `n`, computed from the
/// standard pencils `(B M_V^{-1} B^T, M_Q)`.
pub fn discrete_reference_infsup(
    n: usize,
    stokes: StokesPressure,
) -> Result<ReferenceInfSup, BiotError> {
    let mesh = Arc::new(build_unit_square_mesh(n));
    let vw = build_space(mesh.clone(), Family::Rt0, true, false)?;
    let q0 = build_space(mesh.clone(), Family::P0, false, true)?;
    let z = mean_zero_basis(&q0)?.to_dense();
    let mw = apply_essential_bc(&form(FormKind::VectorMass, 1.0, &vw, &vw)?, Some(&vw), Some(&vw))?;
    let dw = apply_essential_bc(&form(FormKind::DivDiv, 1.0, &vw, &vw)?, Some(&vw), Some(&vw))?;
    let hdiv = mw.add_scaled(1.0, &dw)?;
    let bd = z.transpose()
        * apply_essential_bc(&form(FormKind::DivCoupling, 1.0, &vw, &q0)?, None, Some(&vw))?
            .to_dense();
    let mq0 = z.transpose() * mass_matrix(&q0)?.to_dense() * &z;
    let beta_d = pencil_beta(&bd, &hdiv, &mq0)?;

    let vu = build_space(mesh.clone(), Family::P2Vector, true, false)?;
    let mu_mat = apply_essential_bc(&form(FormKind::VectorMass, 1.0, &vu, &vu)?, Some(&vu), Some(&vu))?;
    let ku = apply_essential_bc(&form(FormKind::Stiffness, 1.0, &vu, &vu)?, Some(&vu), Some(&vu))?;
    let h1 = mu_mat.add_scaled(1.0, &ku)?;
    let (bs, mqs) = match stokes {
        StokesPressure::P0ZeroMean => {
            let b = z.transpose()
                * apply_essential_bc(&form(FormKind::DivCoupling, 1.0, &vu, &q0)?, None, Some(&vu))?
                    .to_dense();
            (b, mq0.clone())
        }
        StokesPressure::P1Dirichlet => {
            let qp = build_space(mesh, Family::P1, true, false)?;
            let b = apply_essential_bc(
                &form(FormKind::DivCoupling, 1.0, &vu, &qp)?,
                Some(&qp),
                Some(&vu),
            )?
            .to_dense();
            let m = apply_essential_bc(&mass_matrix(&qp)?, Some(&qp), Some(&qp))?.to_dense();
            (b, m)
        }
    };
    if bs.nrows() == 0 || bs.ncols() == 0 || bd.ncols() == 0 {
        return Ok(ReferenceInfSup {
            beta_d: f64::NAN,
            beta_s: f64::NAN,
            degenerate: true,
        });
    }
    let beta_s = pencil_beta(&bs, &h1, &mqs)?;
    Ok(ReferenceInfSup {
        beta_d,
        beta_s,
        degenerate: false,
    })
}

fn pencil_beta(
    b: &DMatrix<f64>,
    metric_v: &SparseMatrix,
    metric_q: &DMatrix<f64>,
) -> Result<f64, BiotError> {
    if b.nrows() == 0 || b.ncols() == 0 {
        return Ok(f64::NAN);
    }
    let chol = crate::linalg::cholesky_factor(metric_v, 0.0)?;
    let x = b * chol.solve_mat(&b.transpose());
    let x = (x.clone() + x.transpose()) * 0.5;
    let r = crate::linalg::gen_sym_eig_dense(&x, metric_q, PencilMode::Extremal)
        .map_err(BiotError::Linalg)?;
    Ok(r.eigenvalues[0].max(0.0).sqrt())
}
