use super::NlsProblem;
use crate::error::{NmfError, Result};
use crate::matrix::DenseMatrix;

/// Largest violation of `x ≥ 0`, `y = gram·x − rhs ≥ 0` and `x ⊙ y = 0`.
pub fn kkt_residual(problem: &NlsProblem, x: &DenseMatrix) -> Result<f64> {
    let (k, c) = (problem.k(), problem.c());
    if x.rows() != k || x.cols() != c {
        return Err(NmfError::invalid(format!(
            "solution is {}x{}, expected {k}x{c}",
            x.rows(),
            x.cols()
        )));
    }
    let g = problem.gram();
    let mut worst = 0.0f64;
    for j in 0..c {
        let (xc, b) = (x.col(j), problem.rhs().col(j));
        for i in 0..k {
            let mut y = -b[i];
            for a in 0..k {
                y += g.get(i, a) * xc[a];
            }
            worst = worst.max(-xc[i].min(0.0)).max(-y.min(0.0)).max((xc[i] * y).abs());
        }
    }
    Ok(worst)
}
