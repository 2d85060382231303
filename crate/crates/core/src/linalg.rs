//! Compressed sparse row matrices and a direct sparse LU solver.
//!
//! Assembly goes through [`TripletBuilder`], which sums duplicates in a
//! fixed order so that assembled values are identical run to run.

use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Appends `scale * m` shifted by `(row0, col0)`.
    pub fn push_matrix(&mut self, m: &CsrMatrix, row0: usize, col0: usize, scale: f64) {
        for i in 0..m.nrows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                self.push(row0 + i, col0 + m.col_idx[k], scale * m.values[k]);
            }
        }
    }

    pub fn push_transpose(&mut self, m: &CsrMatrix, row0: usize, col0: usize, scale: f64) {
        for i in 0..m.nrows {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                self.push(row0 + m.col_idx[k], col0 + i, scale * m.values[k]);
            }
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable sort keeps insertion order among duplicates
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 1.0);
        }
        b.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = TripletBuilder::new(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|&(c, _)| c == j).map(|(_, v)| v).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `y^T A x`
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        assert_eq!(y.len(), self.nrows);
        (0..self.nrows)
            .map(|i| y[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        b.push_transpose(self, 0, 0, 1.0);
        b.build()
    }

    /// `alpha * self + beta * other`
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        b.push_matrix(self, 0, 0, alpha);
        b.push_matrix(other, 0, 0, beta);
        b.build()
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Maximum over entries of `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let d = self.add(1.0, &t, -1.0);
        d.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Submatrix on the given row and column index lists. `row_map[i]` is the
    /// new index of old row `i` (or `None` to drop it).
    pub fn select(&self, row_map: &[Option<usize>], nrows: usize, col_map: &[Option<usize>], ncols: usize) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, self.nnz());
        for i in 0..self.nrows {
            let Some(ri) = row_map[i] else { continue };
            for (j, v) in self.row(i) {
                if let Some(cj) = col_map[j] {
                    b.push(ri, cj, v);
                }
            }
        }
        b.build()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[i][j] += v;
            }
        }
        out
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Solver(format!("cannot build sparse matrix: {e:?}")))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// LU factorization with partial pivoting of a square sparse matrix.
pub struct SparseLu {
    matrix: CsrMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::Solver(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows, matrix.ncols
            )));
        }
        let a = matrix.to_faer()?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        Ok(SparseLu {
            matrix: matrix.clone(),
            lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `A x = b` and refines until the relative residual is below
    /// `tol` (at most three refinement sweeps). Returns the solution and its
    /// relative residual.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
        assert_eq!(b.len(), self.dim());
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok((vec![0.0; b.len()], 0.0));
        }
        let mut x = self.raw_solve(b);
        let mut rel = f64::INFINITY;
        for _ in 0..4 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm2(&r) / bnorm;
            if !rel.is_finite() {
                return Err(Error::Solver("solution is not finite (singular system?)".into()));
            }
            if rel <= tol {
                return Ok((x, rel));
            }
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        Err(Error::Solver(format!(
            "relative residual {rel:.3e} above tolerance {tol:.1e}"
        )))
    }
}
