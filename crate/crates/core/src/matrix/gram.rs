use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{NmfError, Result};

/// Symmetric `k x k` product such as `H Hᵀ` or `Wᵀ W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    k: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    /// Rejects anything that is not exactly symmetric.
    pub fn from_values(k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || values.len() != k * k {
            return Err(NmfError::invalid(format!(
                "gram of order {k} needs {} values, got {}",
                k * k,
                values.len()
            )));
        }
        for a in 0..k {
            for b in a + 1..k {
                if values[a + b * k] != values[b + a * k] {
                    return Err(NmfError::invalid(format!("gram not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(Self { k, values })
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(NmfError::invalid("gram must be square"));
        }
        Self::from_values(m.rows(), m.values().to_vec())
    }

    pub fn identity(k: usize) -> Self {
        Self::from_dense(&DenseMatrix::identity(k)).expect("identity is symmetric")
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a + b * self.k]
    }

    /// Column-major (equivalently row-major) values.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn trace(&self) -> f64 {
        (0..self.k).map(|i| self.diag(i)).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::new(self.k, self.k, self.values.clone()).expect("k >= 1")
    }

    /// `trace(self · other)`, i.e. the sum of the entrywise product.
    pub fn trace_product(&self, other: &GramMatrix) -> f64 {
        assert_eq!(self.k, other.k);
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}
