//! Row-compressed sparse matrices at desk scale.

use nalgebra::{DMatrix, DVector};

use super::LinalgError;
use crate::SPD_REL_TOL;

/// Compressed-sparse-row matrix with optional symmetry/PSD flags.
///
/// The flags are assertions made by the producer and verified cheaply:
/// a matrix flagged symmetric must satisfy `|M - M^T|_max <= 1e-12 |M|_max`,
/// a matrix flagged PSD must have no negative diagonal entry.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
    psd: bool,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed and
    /// exact zeros produced by assembly are kept out of the pattern.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "triplet ({i},{j}) out of bounds for {nrows}x{ncols}"
                )));
            }
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
            psd: false,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
            psd: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        let mut m = Self::from_triplets(n, n, &t).unwrap();
        m.symmetric = true;
        m.psd = true;
        m
    }

    pub fn from_dense(d: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != 0.0 {
                    t.push((i, j, d[(i, j)]));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t).unwrap()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_flagged_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_flagged_psd(&self) -> bool {
        self.psd
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] = self.values[k];
            }
        }
        d
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = DVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    /// `y = M^T x` without materializing the transpose.
    pub fn matvec_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows, "matvec_transpose dimension mismatch");
        let mut y = DVector::zeros(self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push((self.col_idx[k], i, self.values[k]));
            }
        }
        let mut m = Self::from_triplets(self.ncols, self.nrows, &t).unwrap();
        m.symmetric = self.symmetric;
        m.psd = self.psd;
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        m.psd = self.psd && s >= 0.0;
        m
    }

    /// `self + s * other`, requiring identical shapes.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self, LinalgError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(LinalgError::DimensionMismatch(format!(
                "add {}x{} with {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push((i, self.col_idx[k], self.values[k]));
            }
        }
        for i in 0..other.nrows {
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                t.push((i, other.col_idx[k], s * other.values[k]));
            }
        }
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `|M - M^T|_max`.
    pub fn symmetry_error(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        match self.add_scaled(-1.0, &t) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Assert the 1e-12 relative symmetry check and set the flag.
    pub fn flag_symmetric(mut self) -> Result<Self, LinalgError> {
        let scale = self.max_abs().max(1e-300);
        let err = self.symmetry_error();
        if err > SPD_REL_TOL * scale {
            return Err(LinalgError::NotSymmetric {
                err,
                tol: SPD_REL_TOL * scale,
            });
        }
        self.symmetric = true;
        Ok(self)
    }

    /// Assert the cheap PSD necessary condition (no negative diagonal) and
    /// set the flag. Must already be flagged symmetric.
    pub fn flag_psd(mut self) -> Result<Self, LinalgError> {
        let m = self.flag_symmetric()?;
        let scale = m.max_abs().max(1e-300);
        for i in 0..m.nrows {
            let mut d = 0.0;
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                if m.col_idx[k] == i {
                    d = m.values[k];
                }
            }
            if d < -SPD_REL_TOL * scale {
                return Err(LinalgError::NotPsd(d));
            }
        }
        self = m;
        self.psd = true;
        Ok(self)
    }

    pub fn diagonal(&self) -> DVector<f64> {
        let n = self.nrows.min(self.ncols);
        let mut d = DVector::zeros(n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }
}
