//! General CSR matrices for sparse node features.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::par::{self, Execution};

/// Rectangular CSR matrix with explicit values. Column indices are sorted
/// within each row and no stored value is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(m: &DenseMatrix) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(m.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            rows: m.rows(),
            cols: m.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        let cells = self.rows * self.cols;
        if cells == 0 {
            0.0
        } else {
            self.nnz() as f64 / cells as f64
        }
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Stored values, in row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same pattern with new values (zeros are kept as explicit entries).
    pub fn with_values(&self, values: Vec<f64>) -> Result<CsrMatrix> {
        if values.len() != self.nnz() {
            return Err(Error::shape("CsrMatrix::with_values", self.nnz(), values.len()));
        }
        Ok(CsrMatrix {
            values,
            ..self.clone()
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// `self · b`.
    pub fn matmul(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul_with(Execution::default(), b)
    }

    pub fn matmul_with(&self, exec: Execution, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.cols {
            return Err(Error::shape("CsrMatrix::matmul", self.cols, b.rows()));
        }
        let k = b.cols();
        let mut out = DenseMatrix::zeros(self.rows, k);
        par::for_each_row(exec, out.as_mut_slice(), k, |i, row| {
            for (j, v) in self.row_entries(i) {
                for (o, x) in row.iter_mut().zip(b.row(j)) {
                    *o += v * x;
                }
            }
        });
        Ok(out)
    }

    /// `selfᵀ · g`, accumulated row by row in ascending order.
    pub fn t_matmul(&self, g: &DenseMatrix) -> Result<DenseMatrix> {
        if g.rows() != self.rows {
            return Err(Error::shape("CsrMatrix::t_matmul", self.rows, g.rows()));
        }
        let k = g.cols();
        let mut out = DenseMatrix::zeros(self.cols, k);
        let data = out.as_mut_slice();
        for i in 0..self.rows {
            let gi = g.row(i);
            for (j, v) in self.row_entries(i) {
                for (o, x) in data[j * k..(j + 1) * k].iter_mut().zip(gi) {
                    *o += v * x;
                }
            }
        }
        Ok(out)
    }
}
