use crate::error::{NmfError, Result};
use crate::matrix::{DenseMatrix, GramMatrix};

/// Denominator floor for the multiplicative rule.
pub const MU_EPSILON: f64 = 1e-16;

/// Multiplicative update of an `r x k` block:
/// `out = current ⊙ rhs ⊘ max(current · gram, ε)`.
pub fn update_mu(gram: &GramMatrix, rhs: &DenseMatrix, current: &DenseMatrix) -> Result<DenseMatrix> {
    let k = gram.k();
    check_dims(k, rhs, current)?;
    if !current.is_nonnegative() {
        return Err(NmfError::invalid("multiplicative update needs a nonnegative iterate"));
    }
    let den = times_gram(current, gram);
    let mut out = current.clone();
    for ((o, &r), &d) in out.values_mut().iter_mut().zip(rhs.values()).zip(den.values()) {
        *o = *o * r / d.max(MU_EPSILON);
    }
    Ok(out)
}

/// `block · gram`, each entry summed in ascending inner index.
pub(crate) fn times_gram(block: &DenseMatrix, gram: &GramMatrix) -> DenseMatrix {
    let (r, k) = (block.rows(), block.cols());
    let mut out = DenseMatrix::zeros(r, k);
    for j in 0..k {
        let dst = out.col_mut(j);
        for l in 0..k {
            let g = gram.get(l, j);
            for (d, &v) in dst.iter_mut().zip(block.col(l)) {
                *d += v * g;
            }
        }
    }
    out
}

pub(crate) fn check_dims(k: usize, rhs: &DenseMatrix, current: &DenseMatrix) -> Result<()> {
    if rhs.cols() != k || current.cols() != k || rhs.rows() != current.rows() {
        return Err(NmfError::invalid(format!(
            "gram is {k}x{k}, rhs {}x{}, current {}x{}",
            rhs.rows(),
            rhs.cols(),
            current.rows(),
            current.cols()
        )));
    }
    Ok(())
}

pub(crate) fn flops(rows: usize, k: usize) -> u64 {
    (2 * rows * k * k + 3 * rows * k) as u64
}
