//! Finite element spaces and assembly of the bilinear forms.
//!
//! Families: piecewise constants (P0), linears (P1), vector-valued linears
//! and quadratics (P1/P2 vector), and lowest-order Raviart-Thomas (RT0).
//! One fixed symmetric 6-point triangle rule, exact to degree 4, covers
//! every integrand that appears (the highest is the P2 vector mass).

use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::{LinalgError, SparseMatrix};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("incompatible space flags: {0}")]
    IncompatibleFlags(String),
    #[error("incompatible spaces for form {kind:?}: {detail}")]
    IncompatibleSpaces { kind: FormKind, detail: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    P0,
    P1,
    P1Vector,
    P2Vector,
    Rt0,
}

impl Family {
    pub fn is_scalar(self) -> bool {
        matches!(self, Family::P0 | Family::P1)
    }
}

/// A finite element space over a mesh, with Dirichlet mask and mean-zero flag.
#[derive(Debug, Clone)]
pub struct FESpace {
    pub mesh: Arc<Mesh>,
    pub family: Family,
    pub ndof: usize,
    /// Per-triangle global DOF lists (vector dofs interleave components).
    pub elem_dofs: Vec<Vec<usize>>,
    /// Dirichlet-constrained DOFs.
    pub constrained: Vec<bool>,
    pub zero_mean: bool,
}

/// Build a space. `dirichlet` constrains the boundary-entity DOFs;
/// `zero_mean` marks scalar L2-type spaces as mean-constrained.
pub fn build_space(
    mesh: Arc<Mesh>,
    family: Family,
    dirichlet: bool,
    zero_mean: bool,
) -> Result<FESpace, FemError> {
    if zero_mean && !family.is_scalar() {
        return Err(FemError::IncompatibleFlags(format!(
            "zero_mean is only defined for scalar spaces, not {family:?}"
        )));
    }
    if zero_mean && dirichlet {
        return Err(FemError::IncompatibleFlags(
            "zero_mean and dirichlet are mutually exclusive".into(),
        ));
    }
    let nv = mesh.vertex_count();
    let ne = mesh.edge_count();
    let nt = mesh.triangle_count();
    let (ndof, elem_dofs, constrained) = match family {
        Family::P0 => {
            let elem: Vec<Vec<usize>> = (0..nt).map(|t| vec![t]).collect();
            (nt, elem, vec![false; nt])
        }
        Family::P1 => {
            let elem: Vec<Vec<usize>> = mesh.triangles.iter().map(|t| t.to_vec()).collect();
            let c = if dirichlet {
                mesh.boundary_vertex.clone()
            } else {
                vec![false; nv]
            };
            (nv, elem, c)
        }
        Family::P1Vector => {
            let elem: Vec<Vec<usize>> = mesh
                .triangles
                .iter()
                .map(|t| t.iter().flat_map(|&v| [2 * v, 2 * v + 1]).collect())
                .collect();
            let mut c = vec![false; 2 * nv];
            if dirichlet {
                for v in 0..nv {
                    if mesh.boundary_vertex[v] {
                        c[2 * v] = true;
                        c[2 * v + 1] = true;
                    }
                }
            }
            (2 * nv, elem, c)
        }
        Family::P2Vector => {
            let nnodes = nv + ne;
            let elem: Vec<Vec<usize>> = (0..nt)
                .map(|t| {
                    let mut nodes: Vec<usize> = mesh.triangles[t].to_vec();
                    nodes.extend(mesh.tri_edges[t].iter().map(|&e| nv + e));
                    nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect()
                })
                .collect();
            let mut c = vec![false; 2 * nnodes];
            if dirichlet {
                for v in 0..nv {
                    if mesh.boundary_vertex[v] {
                        c[2 * v] = true;
                        c[2 * v + 1] = true;
                    }
                }
                for e in 0..ne {
                    if mesh.boundary_edge[e] {
                        c[2 * (nv + e)] = true;
                        c[2 * (nv + e) + 1] = true;
                    }
                }
            }
            (2 * nnodes, elem, c)
        }
        Family::Rt0 => {
            let elem: Vec<Vec<usize>> = mesh.tri_edges.iter().map(|t| t.to_vec()).collect();
            let c = if dirichlet {
                mesh.boundary_edge.clone()
            } else {
                vec![false; ne]
            };
            (ne, elem, c)
        }
    };
    Ok(FESpace {
        mesh,
        family,
        ndof,
        elem_dofs,
        constrained,
        zero_mean,
    })
}

impl FESpace {
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.ndof).filter(|&i| !self.constrained[i]).collect()
    }

    pub fn constrained_count(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Mass,
    Stiffness,
    EpsEps,
    DivDiv,
    DivCoupling,
    VectorMass,
    GradGradScalar,
}

/// A bilinear form to assemble: `coeff * integral(kernel(trial, test))`.
pub struct FormSpec<'a> {
    pub kind: FormKind,
    pub coeff: f64,
    pub trial: &'a FESpace,
    pub test: &'a FESpace,
}

// degree-4 symmetric triangle rule (6 points, weights as area fractions)
const QW: [f64; 6] = [
    0.223_381_589_678_011,
    0.223_381_589_678_011,
    0.223_381_589_678_011,
    0.109_951_743_655_322,
    0.109_951_743_655_322,
    0.109_951_743_655_322,
];
const QA1: f64 = 0.445_948_490_915_965;
const QA2: f64 = 0.091_576_213_509_771;
const QP: [[f64; 2]; 6] = [
    [QA1, QA1],
    [1.0 - 2.0 * QA1, QA1],
    [QA1, 1.0 - 2.0 * QA1],
    [QA2, QA2],
    [1.0 - 2.0 * QA2, QA2],
    [QA2, 1.0 - 2.0 * QA2],
];

struct TriGeom {
    verts: [[f64; 2]; 3],
    area: f64,
    /// Gradients of the barycentric coordinates.
    gl: [[f64; 2]; 3],
}

fn tri_geom(mesh: &Mesh, t: usize) -> TriGeom {
    let [a, b, c] = mesh.triangles[t];
    let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    let j = [
        [pb[0] - pa[0], pc[0] - pa[0]],
        [pb[1] - pa[1], pc[1] - pa[1]],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let area = 0.5 * det.abs();
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    // rows of J^{-1} are the gradients of l1, l2
    let g1 = [inv[0][0], inv[0][1]];
    let g2 = [inv[1][0], inv[1][1]];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    TriGeom {
        verts: [pa, pb, pc],
        area,
        gl: [g0, g1, g2],
    }
}

/// Per-family basis data at one quadrature point.
struct BasisEval {
    /// scalar values (scalar families)
    val: Vec<f64>,
    /// scalar gradients (scalar families)
    grad: Vec<[f64; 2]>,
    /// vector values (vector families)
    vval: Vec<[f64; 2]>,
    /// full gradient tensors, `vgrad[i][comp][deriv]` (P1/P2 vector)
    vgrad: Vec<[[f64; 2]; 2]>,
    /// divergences (vector families)
    div: Vec<f64>,
}

fn rt0_signs(mesh: &Mesh, t: usize) -> [f64; 3] {
    let tri = mesh.triangles[t];
    let mut s = [0.0f64; 3];
    for k in 0..3 {
        let e = mesh.tri_edges[t][k];
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let tang = [pb[0] - pa[0], pb[1] - pa[1]];
        let nrm = [tang[1], -tang[0]];
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let opp = mesh.vertices[tri[k]];
        let out = [mid[0] - opp[0], mid[1] - opp[1]];
        s[k] = if nrm[0] * out[0] + nrm[1] * out[1] > 0.0 {
            1.0
        } else {
            -1.0
        };
    }
    s
}

fn eval_basis(space: &FESpace, geom: &TriGeom, t: usize, lam: [f64; 3], x: [f64; 2]) -> BasisEval {
    let mut out = BasisEval {
        val: Vec::new(),
        grad: Vec::new(),
        vval: Vec::new(),
        vgrad: Vec::new(),
        div: Vec::new(),
    };
    match space.family {
        Family::P0 => {
            out.val = vec![1.0];
            out.grad = vec![[0.0, 0.0]];
        }
        Family::P1 => {
            out.val = lam.to_vec();
            out.grad = geom.gl.to_vec();
        }
        Family::P1Vector | Family::P2Vector => {
            let (sv, sg): (Vec<f64>, Vec<[f64; 2]>) = if space.family == Family::P1Vector {
                (lam.to_vec(), geom.gl.to_vec())
            } else {
                let mut v = Vec::with_capacity(6);
                let mut g = Vec::with_capacity(6);
                for i in 0..3 {
                    v.push(lam[i] * (2.0 * lam[i] - 1.0));
                    g.push([
                        (4.0 * lam[i] - 1.0) * geom.gl[i][0],
                        (4.0 * lam[i] - 1.0) * geom.gl[i][1],
                    ]);
                }
                for k in 0..3 {
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    v.push(4.0 * lam[i] * lam[j]);
                    g.push([
                        4.0 * (lam[i] * geom.gl[j][0] + lam[j] * geom.gl[i][0]),
                        4.0 * (lam[i] * geom.gl[j][1] + lam[j] * geom.gl[i][1]),
                    ]);
                }
                (v, g)
            };
            let n = sv.len();
            out.vval = Vec::with_capacity(2 * n);
            out.vgrad = Vec::with_capacity(2 * n);
            out.div = Vec::with_capacity(2 * n);
            for i in 0..n {
                out.vval.push([sv[i], 0.0]);
                out.vval.push([0.0, sv[i]]);
                out.vgrad.push([[sg[i][0], sg[i][1]], [0.0, 0.0]]);
                out.vgrad.push([[0.0, 0.0], [sg[i][0], sg[i][1]]]);
                out.div.push(sg[i][0]);
                out.div.push(sg[i][1]);
            }
        }
        Family::Rt0 => {
            let signs = rt0_signs(&space.mesh, t);
            let mesh = &space.mesh;
            for k in 0..3 {
                let e = mesh.tri_edges[t][k];
                let elen = mesh.edge_length(e);
                let opp = geom.verts[k];
                let f = signs[k] * elen / (2.0 * geom.area);
                out.vval.push([f * (x[0] - opp[0]), f * (x[1] - opp[1])]);
                out.div.push(signs[k] * elen / geom.area);
            }
        }
    }
    out
}

fn check_compat(form: &FormSpec) -> Result<(), FemError> {
    let FormSpec {
        kind, trial, test, ..
    } = form;
    let fail = |detail: &str| {
        Err(FemError::IncompatibleSpaces {
            kind: *kind,
            detail: detail.to_string(),
        })
    };
    if !Arc::ptr_eq(&trial.mesh, &test.mesh) {
        return fail("trial and test spaces live on different meshes");
    }
    let (tf, sf) = (trial.family, test.family);
    match kind {
        FormKind::Mass => {
            if !(tf.is_scalar() && sf == tf) {
                return fail("mass needs matching scalar spaces");
            }
        }
        FormKind::GradGradScalar => {
            if !(tf == Family::P1 && sf == Family::P1) {
                return fail("grad-grad needs P1 scalar spaces");
            }
        }
        FormKind::Stiffness => {
            if !matches!(tf, Family::P1 | Family::P1Vector | Family::P2Vector) || sf != tf {
                return fail("stiffness needs matching gradient-capable spaces");
            }
        }
        FormKind::VectorMass => {
            if !matches!(tf, Family::P1Vector | Family::P2Vector | Family::Rt0) || sf != tf {
                return fail("vector mass needs matching vector spaces");
            }
        }
        FormKind::EpsEps => {
            if !matches!(tf, Family::P1Vector | Family::P2Vector) || sf != tf {
                return fail("eps-eps needs matching H1 vector spaces");
            }
        }
        FormKind::DivDiv => {
            if !matches!(tf, Family::P1Vector | Family::P2Vector | Family::Rt0) || sf != tf {
                return fail("div-div needs matching vector spaces");
            }
        }
        FormKind::DivCoupling => {
            if !matches!(tf, Family::P1Vector | Family::P2Vector | Family::Rt0) {
                return fail("div coupling needs a vector trial space");
            }
            if !sf.is_scalar() {
                return fail("div coupling needs a scalar test space");
            }
        }
    }
    Ok(())
}

/// Assemble the form into a full-size (unconstrained) matrix,
/// test-dofs by trial-dofs.
pub fn assemble(form: &FormSpec) -> Result<SparseMatrix, FemError> {
    check_compat(form)?;
    let mesh = &form.trial.mesh;
    let mut triplets = Vec::new();
    for t in 0..mesh.triangle_count() {
        let geom = tri_geom(mesh, t);
        let rdofs = &form.test.elem_dofs[t];
        let cdofs = &form.trial.elem_dofs[t];
        let mut local = vec![0.0; rdofs.len() * cdofs.len()];
        for (q, qp) in QP.iter().enumerate() {
            let lam = [1.0 - qp[0] - qp[1], qp[0], qp[1]];
            let x = [
                lam[0] * geom.verts[0][0] + lam[1] * geom.verts[1][0] + lam[2] * geom.verts[2][0],
                lam[0] * geom.verts[0][1] + lam[1] * geom.verts[1][1] + lam[2] * geom.verts[2][1],
            ];
            let w = QW[q] * geom.area;
            let tb = eval_basis(form.test, &geom, t, lam, x);
            let ub = eval_basis(form.trial, &geom, t, lam, x);
            accumulate_kernel(form.kind, &tb, &ub, w, &mut local, cdofs.len());
        }
        for (r, &gi) in rdofs.iter().enumerate() {
            for (c, &gj) in cdofs.iter().enumerate() {
                let v = form.coeff * local[r * cdofs.len() + c];
                if v != 0.0 {
                    triplets.push((gi, gj, v));
                }
            }
        }
    }
    let m = SparseMatrix::from_triplets(form.test.ndof, form.trial.ndof, &triplets)?;
    let symmetric_kind = !matches!(form.kind, FormKind::DivCoupling);
    if symmetric_kind && std::ptr::eq(form.trial, form.test) {
        Ok(m.flag_psd()?)
    } else {
        Ok(m)
    }
}

fn accumulate_kernel(
    kind: FormKind,
    tb: &BasisEval,
    ub: &BasisEval,
    w: f64,
    local: &mut [f64],
    ncols: usize,
) {
    match kind {
        FormKind::Mass => {
            for (r, tv) in tb.val.iter().enumerate() {
                for (c, uv) in ub.val.iter().enumerate() {
                    local[r * ncols + c] += w * tv * uv;
                }
            }
        }
        FormKind::GradGradScalar => {
            for (r, tg) in tb.grad.iter().enumerate() {
                for (c, ug) in ub.grad.iter().enumerate() {
                    local[r * ncols + c] += w * (tg[0] * ug[0] + tg[1] * ug[1]);
                }
            }
        }
        FormKind::Stiffness => {
            if !tb.grad.is_empty() {
                for (r, tg) in tb.grad.iter().enumerate() {
                    for (c, ug) in ub.grad.iter().enumerate() {
                        local[r * ncols + c] += w * (tg[0] * ug[0] + tg[1] * ug[1]);
                    }
                }
            } else {
                for (r, tg) in tb.vgrad.iter().enumerate() {
                    for (c, ug) in ub.vgrad.iter().enumerate() {
                        let mut s = 0.0;
                        for comp in 0..2 {
                            for d in 0..2 {
                                s += tg[comp][d] * ug[comp][d];
                            }
                        }
                        local[r * ncols + c] += w * s;
                    }
                }
            }
        }
        FormKind::VectorMass => {
            for (r, tv) in tb.vval.iter().enumerate() {
                for (c, uv) in ub.vval.iter().enumerate() {
                    local[r * ncols + c] += w * (tv[0] * uv[0] + tv[1] * uv[1]);
                }
            }
        }
        FormKind::EpsEps => {
            for (r, tg) in tb.vgrad.iter().enumerate() {
                let te = sym_part(tg);
                for (c, ug) in ub.vgrad.iter().enumerate() {
                    let ue = sym_part(ug);
                    let mut s = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            s += te[a][b] * ue[a][b];
                        }
                    }
                    local[r * ncols + c] += w * s;
                }
            }
        }
        FormKind::DivDiv => {
            for (r, td) in tb.div.iter().enumerate() {
                for (c, ud) in ub.div.iter().enumerate() {
                    local[r * ncols + c] += w * td * ud;
                }
            }
        }
        FormKind::DivCoupling => {
            for (r, tv) in tb.val.iter().enumerate() {
                for (c, ud) in ub.div.iter().enumerate() {
                    local[r * ncols + c] += w * tv * ud;
                }
            }
        }
    }
}

fn sym_part(g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [g[0][0], 0.5 * (g[0][1] + g[1][0])],
        [0.5 * (g[0][1] + g[1][0]), g[1][1]],
    ]
}

/// Remove constrained rows (per `test`) and/or columns (per `trial`),
/// returning the reduced matrix. Never zero-fills in place.
pub fn apply_essential_bc(
    m: &SparseMatrix,
    test: Option<&FESpace>,
    trial: Option<&FESpace>,
) -> Result<SparseMatrix, FemError> {
    let keep_rows: Vec<usize> = match test {
        Some(s) => {
            if s.ndof != m.nrows() {
                return Err(FemError::Linalg(LinalgError::DimensionMismatch(format!(
                    "bc rows: space ndof {} vs matrix rows {}",
                    s.ndof,
                    m.nrows()
                ))));
            }
            s.free_dofs()
        }
        None => (0..m.nrows()).collect(),
    };
    let keep_cols: Vec<usize> = match trial {
        Some(s) => {
            if s.ndof != m.ncols() {
                return Err(FemError::Linalg(LinalgError::DimensionMismatch(format!(
                    "bc cols: space ndof {} vs matrix cols {}",
                    s.ndof,
                    m.ncols()
                ))));
            }
            s.free_dofs()
        }
        None => (0..m.ncols()).collect(),
    };
    let mut row_map = vec![usize::MAX; m.nrows()];
    for (new, &old) in keep_rows.iter().enumerate() {
        row_map[old] = new;
    }
    let mut col_map = vec![usize::MAX; m.ncols()];
    for (new, &old) in keep_cols.iter().enumerate() {
        col_map[old] = new;
    }
    let mut triplets = Vec::new();
    for i in 0..m.nrows() {
        if row_map[i] == usize::MAX {
            continue;
        }
        for k in m.row_ptr()[i]..m.row_ptr()[i + 1] {
            let j = m.col_idx()[k];
            if col_map[j] != usize::MAX {
                triplets.push((row_map[i], col_map[j], m.values()[k]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(
        keep_rows.len(),
        keep_cols.len(),
        &triplets,
    )?)
}

/// Mass matrix of a scalar space (full size, constraints ignored).
pub fn mass_matrix(space: &FESpace) -> Result<SparseMatrix, FemError> {
    if !space.family.is_scalar() {
        return Err(FemError::IncompatibleSpaces {
            kind: FormKind::Mass,
            detail: "mass matrix needs a scalar space".into(),
        });
    }
    assemble(&FormSpec {
        kind: FormKind::Mass,
        coeff: 1.0,
        trial: space,
        test: space,
    })
}

/// The L2 mean-zero projector `P = I - (1 1^T M) / (1^T M 1)` acting on
/// coefficient vectors; `M P` is symmetric and `P 1 = 0`.
pub fn mean_zero_projector(space: &FESpace) -> Result<SparseMatrix, FemError> {
    let m = mass_matrix(space)?;
    let ones = DVector::from_element(space.ndof, 1.0);
    let m1 = m.matvec(&ones);
    let s: f64 = m1.sum();
    let mut triplets = Vec::with_capacity(space.ndof * (space.ndof + 1));
    for i in 0..space.ndof {
        triplets.push((i, i, 1.0));
        for j in 0..space.ndof {
            triplets.push((i, j, -m1[j] / s));
        }
    }
    Ok(SparseMatrix::from_triplets(
        space.ndof,
        space.ndof,
        &triplets,
    )?)
}

/// Basis of the mean-zero constraint subspace `{q : 1^T M q = 0}` as the
/// columns of an `ndof x (ndof-1)` matrix. Used to reduce genuinely
/// mean-constrained pressure spaces.
pub fn mean_zero_basis(space: &FESpace) -> Result<SparseMatrix, FemError> {
    let m = mass_matrix(space)?;
    let n = space.ndof;
    assert!(n >= 2, "mean-zero basis needs at least two DOFs");
    let ones = DVector::from_element(n, 1.0);
    let m1 = m.matvec(&ones);
    let mut triplets = Vec::with_capacity(2 * (n - 1));
    for i in 0..(n - 1) {
        triplets.push((i, i, 1.0));
        triplets.push((n - 1, i, -m1[i] / m1[n - 1]));
    }
    Ok(SparseMatrix::from_triplets(n, n - 1, &triplets)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(build_unit_square_mesh(n))
    }

    #[test]
    fn space_dof_counts() {
        let m = mesh(2);
        let p1 = build_space(m.clone(), Family::P1, true, false).unwrap();
        assert_eq!(p1.ndof, 9);
        assert_eq!(p1.constrained_count(), 8);
        let rt = build_space(m.clone(), Family::Rt0, true, false).unwrap();
        assert_eq!(rt.ndof, 16);
        assert_eq!(rt.constrained_count(), 8);
        let p2 = build_space(m.clone(), Family::P2Vector, true, false).unwrap();
        assert_eq!(p2.ndof, 2 * (9 + 16));
        let m1 = mesh(1);
        let p0 = build_space(m1, Family::P0, false, true).unwrap();
        assert_eq!(p0.ndof, 2);
        assert!(p0.zero_mean);
    }

    #[test]
    fn incompatible_flags_rejected() {
        let m = mesh(1);
        assert!(matches!(
            build_space(m.clone(), Family::Rt0, false, true),
            Err(FemError::IncompatibleFlags(_))
        ));
        assert!(matches!(
            build_space(m, Family::P1, true, true),
            Err(FemError::IncompatibleFlags(_))
        ));
    }

    #[test]
    fn p0_mass_is_element_areas() {
        let m = mesh(1);
        let p0 = build_space(m, Family::P0, false, false).unwrap();
        let mm = mass_matrix(&p0).unwrap().to_dense();
        assert!((mm[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((mm[(1, 1)] - 0.5).abs() < 1e-15);
        assert!(mm[(0, 1)].abs() < 1e-16);
    }

    #[test]
    fn p1_mass_total_is_domain_area() {
        let m = mesh(3);
        let p1 = build_space(m, Family::P1, false, false).unwrap();
        let mm = mass_matrix(&p1).unwrap();
        let ones = DVector::from_element(p1.ndof, 1.0);
        let total = ones.dot(&mm.matvec(&ones));
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let m = mesh(3);
        let p1 = build_space(m, Family::P1, false, false).unwrap();
        let k = assemble(&FormSpec {
            kind: FormKind::GradGradScalar,
            coeff: 1.0,
            trial: &p1,
            test: &p1,
        })
        .unwrap();
        let ones = DVector::from_element(p1.ndof, 1.0);
        let r = k.matvec(&ones);
        assert!(r.amax() < 1e-13, "constants must lie in the kernel");
    }

    #[test]
    fn patch_test_linear_field() {
        // interpolate f(x,y) = 2x - 3y + 1; interior stiffness residual is zero
        let m = mesh(3);
        let p1 = build_space(m.clone(), Family::P1, false, false).unwrap();
        let k = assemble(&FormSpec {
            kind: FormKind::GradGradScalar,
            coeff: 1.0,
            trial: &p1,
            test: &p1,
        })
        .unwrap();
        let f = DVector::from_iterator(
            p1.ndof,
            m.vertices.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0),
        );
        let r = k.matvec(&f);
        for v in 0..p1.ndof {
            if !m.boundary_vertex[v] {
                assert!(r[v].abs() <= 1e-12, "interior residual {} at {v}", r[v]);
            }
        }
    }

    #[test]
    fn dirichlet_stiffness_center_value() {
        // n=2: single interior vertex, five-point-stencil value 4
        let m = mesh(2);
        let p1 = build_space(m, Family::P1, true, false).unwrap();
        let k = assemble(&FormSpec {
            kind: FormKind::GradGradScalar,
            coeff: 1.0,
            trial: &p1,
            test: &p1,
        })
        .unwrap();
        let kr = apply_essential_bc(&k, Some(&p1), Some(&p1)).unwrap();
        assert_eq!(kr.nrows(), 1);
        assert!((kr.to_dense()[(0, 0)] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn fully_constrained_reduces_to_empty() {
        let m = mesh(1);
        let p1 = build_space(m, Family::P1, true, false).unwrap();
        assert_eq!(p1.constrained_count(), 4);
        let k = mass_matrix(&p1).unwrap();
        let kr = apply_essential_bc(&k, Some(&p1), Some(&p1)).unwrap();
        assert_eq!((kr.nrows(), kr.ncols()), (0, 0));
    }

    #[test]
    fn rectangular_bc_reduces_single_side() {
        let m = mesh(2);
        let rt = build_space(m.clone(), Family::Rt0, true, false).unwrap();
        let p0 = build_space(m, Family::P0, false, false).unwrap();
        let b = assemble(&FormSpec {
            kind: FormKind::DivCoupling,
            coeff: 1.0,
            trial: &rt,
            test: &p0,
        })
        .unwrap();
        let br = apply_essential_bc(&b, None, Some(&rt)).unwrap();
        assert_eq!(br.nrows(), 8);
        assert_eq!(br.ncols(), 8);
    }

    #[test]
    fn rt0_div_coupling_matches_divergence_theorem() {
        // brute-force quadrature oracle per element: midpoint refinement sum
        // of div(phi) over each triangle equals the signed edge length
        let m = mesh(1);
        let rt = build_space(m.clone(), Family::Rt0, false, false).unwrap();
        let p0 = build_space(m.clone(), Family::P0, false, false).unwrap();
        let b = assemble(&FormSpec {
            kind: FormKind::DivCoupling,
            coeff: 1.0,
            trial: &rt,
            test: &p0,
        })
        .unwrap()
        .to_dense();
        for t in 0..m.triangle_count() {
            for (k, &e) in m.tri_edges[t].iter().enumerate() {
                let geom = tri_geom(&m, t);
                let signs = rt0_signs(&m, t);
                // oracle: crude Monte-Carlo-free Riemann sum of div over the triangle
                let mut acc = 0.0;
                let steps = 60;
                let mut count = 0.0;
                for a in 0..steps {
                    for bb in 0..(steps - a) {
                        let l1 = (a as f64 + 0.3) / steps as f64;
                        let l2 = (bb as f64 + 0.3) / steps as f64;
                        let lam = [1.0 - l1 - l2, l1, l2];
                        if lam[0] < 0.0 {
                            continue;
                        }
                        let x = [
                            lam[0] * geom.verts[0][0]
                                + lam[1] * geom.verts[1][0]
                                + lam[2] * geom.verts[2][0],
                            lam[0] * geom.verts[0][1]
                                + lam[1] * geom.verts[1][1]
                                + lam[2] * geom.verts[2][1],
                        ];
                        let basis = eval_basis(&rt, &geom, t, lam, x);
                        acc += basis.div[k];
                        count += 1.0;
                    }
                }
                let oracle = acc / count * geom.area;
                let expected = signs[k] * m.edge_length(e);
                assert!(
                    (oracle - expected).abs() < 1e-10,
                    "div integral {oracle} vs signed length {expected}"
                );
                assert!((b[(t, e)] - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rt0_interelement_normal_continuity() {
        // the diagonal edge of the n=1 mesh is shared; both triangles must
        // produce the same normal trace for the shared basis function
        let m = mesh(1);
        let rt = build_space(m.clone(), Family::Rt0, false, false).unwrap();
        let shared = (0..m.edge_count())
            .find(|&e| !m.boundary_edge[e])
            .unwrap();
        let [a, bv] = m.edges[shared];
        let (pa, pb) = (m.vertices[a], m.vertices[bv]);
        let tang = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = (tang[0] * tang[0] + tang[1] * tang[1]).sqrt();
        let nrm = [tang[1] / len, -tang[0] / len];
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let mut traces = Vec::new();
        for t in 0..2 {
            let k = m.tri_edges[t].iter().position(|&e| e == shared).unwrap();
            let geom = tri_geom(&m, t);
            let lam = bary_of(&geom, mid);
            let basis = eval_basis(&rt, &geom, t, lam, mid);
            traces.push(basis.vval[k][0] * nrm[0] + basis.vval[k][1] * nrm[1]);
        }
        assert!((traces[0] - traces[1]).abs() < 1e-13);
    }

    fn bary_of(geom: &TriGeom, x: [f64; 2]) -> [f64; 3] {
        let l1 = geom.gl[1][0] * (x[0] - geom.verts[0][0])
            + geom.gl[1][1] * (x[1] - geom.verts[0][1]);
        let l2 = geom.gl[2][0] * (x[0] - geom.verts[0][0])
            + geom.gl[2][1] * (x[1] - geom.verts[0][1]);
        [1.0 - l1 - l2, l1, l2]
    }

    #[test]
    fn eps_eps_kernel_is_rigid_modes() {
        use crate::linalg::{gen_sym_eig, PencilMode, SparseMatrix};
        let m = mesh(1);
        let p2 = build_space(m.clone(), Family::P2Vector, false, false).unwrap();
        let e = assemble(&FormSpec {
            kind: FormKind::EpsEps,
            coeff: 1.0,
            trial: &p2,
            test: &p2,
        })
        .unwrap();
        let id = SparseMatrix::identity(p2.ndof);
        let r = gen_sym_eig(&e, &id, PencilMode::Full).unwrap();
        let zero = r.eigenvalues.iter().filter(|&&v| v.abs() < 1e-10).count();
        assert_eq!(zero, 3, "rigid body modes");
        // after Dirichlet reduction the kernel is gone
        let p2d = build_space(m, Family::P2Vector, true, false).unwrap();
        let ed = assemble(&FormSpec {
            kind: FormKind::EpsEps,
            coeff: 1.0,
            trial: &p2d,
            test: &p2d,
        })
        .unwrap();
        let edr = apply_essential_bc(&ed, Some(&p2d), Some(&p2d)).unwrap();
        let idr = SparseMatrix::identity(edr.nrows());
        let rr = gen_sym_eig(&edr, &idr, PencilMode::Extremal).unwrap();
        assert!(rr.eigenvalues[0] > 1e-8, "Korn holds after Dirichlet");
    }

    #[test]
    fn symmetric_kinds_pass_symmetry_check() {
        let m = mesh(2);
        let p2 = build_space(m.clone(), Family::P2Vector, false, false).unwrap();
        let rt = build_space(m.clone(), Family::Rt0, false, false).unwrap();
        for (kind, sp) in [
            (FormKind::EpsEps, &p2),
            (FormKind::DivDiv, &p2),
            (FormKind::Stiffness, &p2),
            (FormKind::VectorMass, &rt),
            (FormKind::DivDiv, &rt),
        ] {
            let a = assemble(&FormSpec {
                kind,
                coeff: 1.0,
                trial: sp,
                test: sp,
            })
            .unwrap();
            assert!(a.is_flagged_symmetric(), "{kind:?} not flagged");
        }
    }

    #[test]
    fn incompatible_spaces_rejected() {
        let m = mesh(1);
        let p0 = build_space(m.clone(), Family::P0, false, false).unwrap();
        let rt = build_space(m, Family::Rt0, false, false).unwrap();
        let r = assemble(&FormSpec {
            kind: FormKind::Mass,
            coeff: 1.0,
            trial: &rt,
            test: &p0,
        });
        assert!(matches!(r, Err(FemError::IncompatibleSpaces { .. })));
    }

    #[test]
    fn projector_annihilates_constants_and_is_idempotent() {
        let m = mesh(2);
        let p1 = build_space(m, Family::P1, false, false).unwrap();
        let p = mean_zero_projector(&p1).unwrap();
        let ones = DVector::from_element(p1.ndof, 1.0);
        assert!(p.matvec(&ones).amax() < 1e-14);
        // an already mean-zero vector is fixed
        let mm = mass_matrix(&p1).unwrap();
        let mut q = DVector::zeros(p1.ndof);
        q[0] = 1.0;
        let mean = ones.dot(&mm.matvec(&q)) / ones.dot(&mm.matvec(&ones));
        let q0 = q.add_scalar(-mean);
        assert!((p.matvec(&q0) - &q0).amax() < 1e-12);
        // M P symmetric
        let mp = mm.to_dense() * p.to_dense();
        assert!((mp.clone() - mp.transpose()).amax() < 1e-13);
    }

    #[test]
    fn projector_p0_n1_hand_value() {
        let m = mesh(1);
        let p0 = build_space(m, Family::P0, false, true).unwrap();
        let p = mean_zero_projector(&p0).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = p.matvec(&x);
        assert!((y[0] - 0.5).abs() < 1e-14 && (y[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn mean_zero_basis_spans_constraint() {
        let m = mesh(2);
        let p0 = build_space(m, Family::P0, false, true).unwrap();
        let z = mean_zero_basis(&p0).unwrap();
        assert_eq!((z.nrows(), z.ncols()), (8, 7));
        let mm = mass_matrix(&p0).unwrap();
        let ones = DVector::from_element(8, 1.0);
        let m1 = mm.matvec(&ones);
        for j in 0..7 {
            let mut col = DVector::zeros(8);
            for i in 0..8 {
                col[i] = z.to_dense()[(i, j)];
            }
            assert!(m1.dot(&col).abs() < 1e-14, "column {j} not mean-zero");
        }
    }

    #[test]
    fn rt0_commuting_rank() {
        // div maps Dirichlet RT0 onto mean-zero P0: rank(B) = ndof(P0) - 1
        use saddlecheck_oracle::singular_values;
        let m = mesh(2);
        let rt = build_space(m.clone(), Family::Rt0, true, false).unwrap();
        let p0 = build_space(m, Family::P0, false, false).unwrap();
        let b = assemble(&FormSpec {
            kind: FormKind::DivCoupling,
            coeff: 1.0,
            trial: &rt,
            test: &p0,
        })
        .unwrap();
        let br = apply_essential_bc(&b, None, Some(&rt)).unwrap();
        let sv = singular_values(&br.to_dense());
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv[0]).count();
        assert_eq!(rank, p0.ndof - 1);
    }
}
