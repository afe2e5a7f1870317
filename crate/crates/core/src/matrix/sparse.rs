use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{NmfError, Result};

/// Compressed-sparse-column matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NmfError::invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if col_ptr.len() != cols + 1 || col_ptr[0] != 0 {
            return Err(NmfError::invalid("column pointer array malformed"));
        }
        if col_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(NmfError::invalid("column pointers must be nondecreasing"));
        }
        let nnz = col_ptr[cols];
        if row_idx.len() != nnz || values.len() != nnz {
            return Err(NmfError::invalid(format!(
                "nnz = {nnz} but {} row indices and {} values",
                row_idx.len(),
                values.len()
            )));
        }
        for j in 0..cols {
            let idx = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(NmfError::invalid(format!(
                    "row indices in column {j} not strictly increasing"
                )));
            }
            if idx.last().is_some_and(|&r| r >= rows) {
                return Err(NmfError::invalid(format!("row index out of range in column {j}")));
            }
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(NmfError::invalid(format!(
                "entry ({r}, {c}) outside {rows}x{cols}"
            )));
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::new(rows, cols, col_ptr, row_idx, values)
    }

    /// Stores every nonzero of `dense`.
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let mut col_ptr = Vec::with_capacity(dense.cols() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..dense.cols() {
            for (i, &v) in dense.col(j).iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            rows: dense.rows(),
            cols: dense.cols(),
            col_ptr,
            row_idx,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.col_ptr[self.cols]
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values stored in column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[s..e], &self.values[s..e])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            let (idx, vals) = self.col(j);
            let col = d.col_mut(j);
            for (&i, &v) in idx.iter().zip(vals) {
                col[i] = v;
            }
        }
        d
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> SparseMatrix {
        assert!(r0 < r1 && r1 <= self.rows && c0 < c1 && c1 <= self.cols);
        let mut col_ptr = Vec::with_capacity(c1 - c0 + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in c0..c1 {
            let (idx, vals) = self.col(j);
            let lo = idx.partition_point(|&i| i < r0);
            let hi = idx.partition_point(|&i| i < r1);
            row_idx.extend(idx[lo..hi].iter().map(|&i| i - r0));
            values.extend_from_slice(&vals[lo..hi]);
            col_ptr.push(row_idx.len());
        }
        SparseMatrix {
            rows: r1 - r0,
            cols: c1 - c0,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Zero-extends to `rows x cols`.
    pub fn padded(&self, rows: usize, cols: usize) -> SparseMatrix {
        assert!(rows >= self.rows && cols >= self.cols);
        let mut col_ptr = self.col_ptr.clone();
        col_ptr.resize(cols + 1, self.nnz());
        SparseMatrix {
            rows,
            cols,
            col_ptr,
            row_idx: self.row_idx.clone(),
            values: self.values.clone(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}
