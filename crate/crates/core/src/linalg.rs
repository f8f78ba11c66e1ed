//! Sparse assembly by triplets and direct solves through `faer`.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("solution has non-finite entries")]
    NonFinite,
    #[error("sparse structure error: {0}")]
    Structure(String),
}

/// Square sparse matrix under assembly; duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        SparseBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        SparseBuilder {
            n,
            entries: Vec::with_capacity(nnz),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push(Triplet::new(i, j, v));
    }

    /// Largest diagonal magnitude.
    pub fn max_diagonal(&self) -> f64 {
        let mut d = vec![0.0; self.n];
        for t in &self.entries {
            if t.row == t.col {
                d[t.row] += t.val;
            }
        }
        d.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    fn matrix(&self, shift: f64) -> Result<SparseColMat<usize, f64>, LinalgError> {
        let mut entries = self.entries.clone();
        if shift != 0.0 {
            entries.extend((0..self.n).map(|i| Triplet::new(i, i, shift)));
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &entries)
            .map_err(|e| LinalgError::Structure(format!("{e:?}")))
    }

    /// Cholesky solve of `(A + shift I) x = b` for symmetric positive definite `A`.
    pub fn solve_spd(&self, b: &[f64], shift: f64) -> Result<Vec<f64>, LinalgError> {
        let a = self.matrix(shift)?;
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|_| LinalgError::NotPositiveDefinite)?;
        finish(llt.solve(Col::from_fn(self.n, |i| b[i])))
    }

    /// LU solve of `A x = b`.
    pub fn solve_general(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let a = self.matrix(0.0)?;
        let lu = a.sp_lu().map_err(|_| LinalgError::Singular)?;
        finish(lu.solve(Col::from_fn(self.n, |i| b[i])))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }
}

fn finish(x: Col<f64>) -> Result<Vec<f64>, LinalgError> {
    let v: Vec<f64> = (0..x.nrows()).map(|i| x[i]).collect();
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(LinalgError::NonFinite)
    }
}
