//! Local update computations: the per-rank kernels that turn a Gram matrix
//! and a cross product into an updated factor block.

mod bpp;
mod hals;
mod kkt;
mod mu;

pub use bpp::{solve_bpp, solve_bpp_detailed, BppOutcome, EXCHANGE_CAP_PER_K};
pub use hals::{
    normalize_columns, reset_columns, update_hals, update_hals_scaled, HalsUpdate, Normalized,
    DEGENERATE_COLUMN_SUM,
};
pub use kkt::kkt_residual;
pub use mu::{update_mu, MU_EPSILON};

use mu::check_dims;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};
use crate::matrix::{DenseMatrix, GramMatrix};

/// Which local update computation drives the factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mu,
    Hals,
    Bpp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Mu, Algorithm::Hals, Algorithm::Bpp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mu => "mu",
            Algorithm::Hals => "hals",
            Algorithm::Bpp => "bpp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu" => Ok(Algorithm::Mu),
            "hals" => Ok(Algorithm::Hals),
            "bpp" | "abpp" | "anls-bpp" => Ok(Algorithm::Bpp),
            other => Err(NmfError::invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// `min ‖C x − b‖` for every column of `B`, given `CᵀC` and `CᵀB`.
#[derive(Clone, Debug)]
pub struct NlsProblem {
    gram: GramMatrix,
    rhs: DenseMatrix,
}

impl NlsProblem {
    /// `rhs` is `k x c`, one right-hand side per column.
    pub fn new(gram: GramMatrix, rhs: DenseMatrix) -> Result<Self> {
        if rhs.rows() != gram.k() {
            return Err(NmfError::invalid(format!(
                "gram is {k}x{k} but rhs has {} rows",
                rhs.rows(),
                k = gram.k()
            )));
        }
        Ok(Self { gram, rhs })
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn rhs(&self) -> &DenseMatrix {
        &self.rhs
    }

    pub fn k(&self) -> usize {
        self.gram.k()
    }

    pub fn c(&self) -> usize {
        self.rhs.cols()
    }
}

/// Passive (free) index masks, one per right-hand side column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSetPartition {
    k: usize,
    passive: Vec<bool>,
}

impl ActiveSetPartition {
    pub fn new(k: usize, c: usize) -> Self {
        Self {
            k,
            passive: vec![false; k * c],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn columns(&self) -> usize {
        self.passive.len() / self.k
    }

    pub fn column(&self, j: usize) -> &[bool] {
        &self.passive[j * self.k..(j + 1) * self.k]
    }

    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [bool] {
        &mut self.passive[j * self.k..(j + 1) * self.k]
    }

    pub fn is_passive(&self, i: usize, j: usize) -> bool {
        self.passive[i + j * self.k]
    }
}

/// Updates an `r x k` factor block with the given algorithm.
///
/// `rhs` is the matching `r x k` cross product (`A Hᵀ` rows for `W`,
/// `Aᵀ W` rows for `Hᵀ`). HALS uses the diagonally scaled column rule and
/// reports per-column squared sums for the caller to normalize.
pub fn update_block(
    algo: Algorithm,
    gram: &GramMatrix,
    rhs: &DenseMatrix,
    current: &DenseMatrix,
) -> Result<BlockUpdate> {
    match algo {
        Algorithm::Mu => Ok(BlockUpdate {
            block: update_mu(gram, rhs, current)?,
            col_sum_sq: None,
            flops: mu::flops(rhs.rows(), gram.k()),
        }),
        Algorithm::Hals => {
            let up = update_hals_scaled(gram, rhs, current)?;
            Ok(BlockUpdate {
                block: up.block,
                col_sum_sq: Some(up.col_sum_sq),
                flops: hals::flops(rhs.rows(), gram.k()),
            })
        }
        Algorithm::Bpp => {
            check_dims(gram.k(), rhs, current)?;
            let (g, r, live) = drop_dead_components(gram, rhs)?;
            let problem = NlsProblem::new(g, r.transpose())?;
            let out = solve_bpp_detailed(&problem)?;
            let block = match live {
                None => out.x.transpose(),
                Some(live) => {
                    let mut full = DenseMatrix::zeros(rhs.rows(), gram.k());
                    for (a, &i) in live.iter().enumerate() {
                        full.col_mut(i).copy_from_slice(out.x.row_block(a, a + 1).values());
                    }
                    full
                }
            };
            Ok(BlockUpdate {
                block,
                col_sum_sq: None,
                flops: out.flops,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockUpdate {
    pub block: DenseMatrix,
    /// HALS only: squared sums of the updated columns over local rows.
    pub col_sum_sq: Option<Vec<f64>>,
    pub flops: u64,
}

/// A factor component that is identically zero contributes nothing to the
/// model and leaves a zero row and column in the other factor's Gram
/// matrix. Those components are removed from the solve and pinned at zero.
fn drop_dead_components(
    gram: &GramMatrix,
    rhs: &DenseMatrix,
) -> Result<(GramMatrix, DenseMatrix, Option<Vec<usize>>)> {
    let k = gram.k();
    let live: Vec<usize> = (0..k).filter(|&i| gram.diag(i) > 0.0).collect();
    if live.len() == k {
        return Ok((gram.clone(), rhs.clone(), None));
    }
    if live.is_empty() {
        return Err(NmfError::invalid("every factor component is zero"));
    }
    let kl = live.len();
    let g = GramMatrix::from_values(
        kl,
        live.iter()
            .flat_map(|&b| live.iter().map(move |&a| (a, b)))
            .map(|(a, b)| gram.get(a, b))
            .collect(),
    )?;
    let r = DenseMatrix::from_fn(rhs.rows(), kl, |i, a| rhs.get(i, live[a]));
    Ok((g, r, Some(live)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("ABPP".parse::<Algorithm>().unwrap(), Algorithm::Bpp);
        assert!("pg".parse::<Algorithm>().is_err());
    }

    #[test]
    fn bpp_block_pins_dead_component() {
        // second component of the fixed factor is all zeros
        let gram = GramMatrix::from_values(2, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let rhs = DenseMatrix::from_rows(&[[8.0, 0.0], [2.0, 0.0]]).unwrap();
        let cur = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let up = update_block(Algorithm::Bpp, &gram, &rhs, &cur).unwrap();
        assert_eq!(up.block.values(), &[2.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn zero_rhs_rows_give_zero_rows() {
        let gram = GramMatrix::from_values(2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let rhs = DenseMatrix::zeros(3, 2);
        let cur = DenseMatrix::zeros(3, 2);
        for algo in Algorithm::ALL {
            let up = update_block(algo, &gram, &rhs, &cur).unwrap();
            assert_eq!(up.block, cur, "{algo}");
        }
    }
}
