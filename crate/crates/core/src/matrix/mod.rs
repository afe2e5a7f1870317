//! Dense and sparse storage plus the multiplication kernels every update
//! path shares.

mod dense;
mod gram;
mod ops;
mod sparse;

pub use dense::DenseMatrix;
pub use gram::GramMatrix;
pub use ops::{frobenius_sq, gram, mm_a_ht, mm_wt_a};
pub use sparse::SparseMatrix;

use serde::{Deserialize, Serialize};

/// Borrowed view of either storage kind.
#[derive(Clone, Copy, Debug)]
pub enum MatRef<'a> {
    Dense(&'a DenseMatrix),
    Sparse(&'a SparseMatrix),
}

impl MatRef<'_> {
    pub fn rows(&self) -> usize {
        match self {
            MatRef::Dense(d) => d.rows(),
            MatRef::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatRef::Dense(d) => d.cols(),
            MatRef::Sparse(s) => s.cols(),
        }
    }
}

impl<'a> From<&'a DenseMatrix> for MatRef<'a> {
    fn from(d: &'a DenseMatrix) -> Self {
        MatRef::Dense(d)
    }
}

impl<'a> From<&'a SparseMatrix> for MatRef<'a> {
    fn from(s: &'a SparseMatrix) -> Self {
        MatRef::Sparse(s)
    }
}

impl<'a> From<&'a DataMatrix> for MatRef<'a> {
    fn from(m: &'a DataMatrix) -> Self {
        match m {
            DataMatrix::Dense(d) => MatRef::Dense(d),
            DataMatrix::Sparse(s) => MatRef::Sparse(s),
        }
    }
}

/// An input matrix `A` in either storage kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl DataMatrix {
    pub fn rows(&self) -> usize {
        MatRef::from(self).rows()
    }

    pub fn cols(&self) -> usize {
        MatRef::from(self).cols()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, DataMatrix::Sparse(_))
    }

    /// Stored entries; every entry for dense storage.
    pub fn nnz(&self) -> usize {
        match self {
            DataMatrix::Dense(d) => d.rows() * d.cols(),
            DataMatrix::Sparse(s) => s.nnz(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        frobenius_sq(self)
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            DataMatrix::Dense(d) => d.is_nonnegative(),
            DataMatrix::Sparse(s) => s.is_nonnegative(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            DataMatrix::Dense(d) => d.clone(),
            DataMatrix::Sparse(s) => s.to_dense(),
        }
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> DataMatrix {
        match self {
            DataMatrix::Dense(d) => DataMatrix::Dense(d.block(r0, r1, c0, c1)),
            DataMatrix::Sparse(s) => DataMatrix::Sparse(s.block(r0, r1, c0, c1)),
        }
    }

    pub fn padded(&self, rows: usize, cols: usize) -> DataMatrix {
        match self {
            DataMatrix::Dense(d) => DataMatrix::Dense(d.padded(rows, cols)),
            DataMatrix::Sparse(s) => DataMatrix::Sparse(s.padded(rows, cols)),
        }
    }

    /// Flops of one `A·Hᵀ` or `Wᵀ·A` product with inner rank `k`.
    pub fn product_flops(&self, k: usize) -> u64 {
        2 * self.nnz() as u64 * k as u64
    }
}

impl From<DenseMatrix> for DataMatrix {
    fn from(d: DenseMatrix) -> Self {
        DataMatrix::Dense(d)
    }
}

impl From<SparseMatrix> for DataMatrix {
    fn from(s: SparseMatrix) -> Self {
        DataMatrix::Sparse(s)
    }
}
