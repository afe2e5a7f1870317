//! Column-wise HALS updates and the global column normalization that
//! follows the `W` update.

use super::mu::check_dims;
use crate::error::{NmfError, Result};
use crate::matrix::{DenseMatrix, GramMatrix};

/// Columns whose global squared sum falls below this are left unnormalized
/// and flagged.
pub const DEGENERATE_COLUMN_SUM: f64 = 1e-24;

#[derive(Clone, Debug)]
pub struct HalsUpdate {
    pub block: DenseMatrix,
    /// Squared sum of each updated column over the rows of this block.
    pub col_sum_sq: Vec<f64>,
    /// Columns where `gram(i, i) = 0` met a nonzero right-hand side.
    pub degenerate: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Literal,
    Scaled,
}

/// Closed-form column sweep:
/// `col_i ← [col_i + rhs(:, i) − block · gram(:, i)]₊`, in column order,
/// each column seeing the already-updated columns before it.
pub fn update_hals(gram: &GramMatrix, rhs: &DenseMatrix, current: &DenseMatrix) -> Result<HalsUpdate> {
    sweep(gram, rhs, current, Rule::Literal)
}

/// Same sweep with the residual term divided by `gram(i, i)`, which makes
/// each column step the exact minimizer of its block. Columns with a zero
/// diagonal are left unchanged.
pub fn update_hals_scaled(gram: &GramMatrix, rhs: &DenseMatrix, current: &DenseMatrix) -> Result<HalsUpdate> {
    sweep(gram, rhs, current, Rule::Scaled)
}

fn sweep(gram: &GramMatrix, rhs: &DenseMatrix, current: &DenseMatrix, rule: Rule) -> Result<HalsUpdate> {
    let k = gram.k();
    check_dims(k, rhs, current)?;
    let r = current.rows();
    let mut block = current.clone();
    let mut col_sum_sq = vec![0.0; k];
    let mut degenerate = Vec::new();
    let mut prod = vec![0.0; r];
    for i in 0..k {
        let gii = gram.diag(i);
        let rhs_i = rhs.col(i);
        if gii <= 0.0 {
            if rhs_i.iter().any(|&v| v != 0.0) {
                degenerate.push(i);
            }
            if rule == Rule::Scaled {
                col_sum_sq[i] = block.col(i).iter().map(|v| v * v).sum();
                continue;
            }
        }
        prod.iter_mut().for_each(|p| *p = 0.0);
        for l in 0..k {
            let g = gram.get(l, i);
            for (p, &v) in prod.iter_mut().zip(block.col(l)) {
                *p += v * g;
            }
        }
        let col = block.col_mut(i);
        let mut s = 0.0;
        for ((c, &b), &p) in col.iter_mut().zip(rhs_i).zip(&prod) {
            let v = match rule {
                Rule::Literal => *c + b - p,
                Rule::Scaled => *c + (b - p) / gii,
            };
            *c = v.max(0.0);
            s += *c * *c;
        }
        col_sum_sq[i] = s;
    }
    Ok(HalsUpdate {
        block,
        col_sum_sq,
        degenerate,
    })
}

pub(crate) fn flops(rows: usize, k: usize) -> u64 {
    (2 * rows * k * k + 4 * rows * k) as u64
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub block: DenseMatrix,
    /// Norm each column was divided by; 1 for flagged columns.
    pub norms: Vec<f64>,
    /// Columns whose global squared sum was below [`DEGENERATE_COLUMN_SUM`].
    pub flagged: Vec<usize>,
}

/// Divides each column by the square root of its global squared sum.
pub fn normalize_columns(block: &DenseMatrix, global_col_sum_sq: &[f64]) -> Result<Normalized> {
    if global_col_sum_sq.len() != block.cols() {
        return Err(NmfError::invalid(format!(
            "{} column sums for {} columns",
            global_col_sum_sq.len(),
            block.cols()
        )));
    }
    let mut out = block.clone();
    let mut norms = vec![1.0; block.cols()];
    let mut flagged = Vec::new();
    for (j, &s) in global_col_sum_sq.iter().enumerate() {
        if !(s >= DEGENERATE_COLUMN_SUM) {
            flagged.push(j);
            continue;
        }
        let norm = s.sqrt();
        norms[j] = norm;
        out.col_mut(j).iter_mut().for_each(|v| *v /= norm);
    }
    Ok(Normalized {
        block: out,
        norms,
        flagged,
    })
}

/// Refills collapsed columns with `f64::EPSILON` on the first `valid_rows`
/// rows so the next Gram matrix stays nonsingular. Rows past `valid_rows`
/// are padding and stay zero.
pub fn reset_columns(block: &mut DenseMatrix, columns: &[usize], valid_rows: usize) {
    for &j in columns {
        let col = block.col_mut(j);
        let n = valid_rows.min(col.len());
        col[..n].iter_mut().for_each(|v| *v = f64::EPSILON);
    }
}
