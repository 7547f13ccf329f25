//! Thin wrappers over faer's sparse direct solvers.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Row-oriented builder for a sparse real matrix.
#[derive(Clone, Debug, Default)]
pub struct SparseBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseBuilder {
    pub fn new(cols: usize) -> Self {
        Self { rows: 0, cols, entries: Vec::new() }
    }

    /// Appends a row and returns its index.
    /// A builder with a fixed number of rows, filled by [`Self::push`].
    pub fn with_shape(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn push_row(&mut self, row: impl IntoIterator<Item = (usize, f64)>) -> usize {
        let r = self.rows;
        for (c, v) in row {
            if v != 0.0 {
                self.entries.push(Triplet::new(r, c, v));
            }
        }
        self.rows += 1;
        r
    }

    pub fn push(&mut self, row: usize, col: usize, v: f64) {
        self.rows = self.rows.max(row + 1);
        if v != 0.0 {
            self.entries.push(Triplet::new(row, col, v));
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn build(&self) -> Result<SparseColMat<usize, f64>> {
        SparseColMat::try_new_from_triplets(self.rows, self.cols, &self.entries)
            .map_err(|e| Error::LinearSolve(format!("sparse assembly failed: {e:?}")))
    }
}

/// Sparse LU factorization of a square matrix.
pub struct SquareSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SquareSolver {
    pub fn new(m: &SparseColMat<usize, f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        let lu = m.sp_lu().map_err(|e| Error::LinearSolve(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { lu, n: m.nrows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let b = Col::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Least-squares solution of an overdetermined sparse system by QR.
pub fn least_squares(m: &SparseColMat<usize, f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.nrows() || m.nrows() < m.ncols() {
        return Err(Error::Dimension("least squares needs rows >= cols and a matching right-hand side".into()));
    }
    let qr = m.sp_qr().map_err(|e| Error::PoissonDivergence(format!("sparse QR failed: {e:?}")))?;
    let b = Col::from_fn(m.nrows(), |i| rhs[i]);
    let x = qr.solve_lstsq(&b);
    let out: Vec<f64> = (0..m.ncols()).map(|i| x[i]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::PoissonDivergence("least-squares solution is not finite".into()));
    }
    Ok(out)
}

/// `y = M x`.
pub fn apply(m: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    let v = Col::from_fn(x.len(), |i| x[i]);
    let y = m * &v;
    (0..m.nrows()).map(|i| y[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_and_least_squares_agree_on_square_systems() {
        let mut b = SparseBuilder::new(3);
        b.push_row([(0, 4.0), (1, 1.0)]);
        b.push_row([(0, 1.0), (1, 3.0), (2, -1.0)]);
        b.push_row([(1, -1.0), (2, 2.0)]);
        let m = b.build().unwrap();
        let rhs = [1.0, 2.0, 3.0];
        let x = SquareSolver::new(&m).unwrap().solve(&rhs);
        let y = least_squares(&m, &rhs).unwrap();
        let back = apply(&m, &x);
        for i in 0..3 {
            assert!((back[i] - rhs[i]).abs() < 1e-13);
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }
}
