//! Multiplication kernels.
//!
//! Every output entry accumulates its inner products in ascending inner
//! index starting from `0.0`, so the dense and sparse paths agree bitwise
//! (skipped zeros contribute exact `+0.0` terms in the dense path).

use super::{DenseMatrix, GramMatrix, MatRef, SparseMatrix};
use crate::error::{NmfError, Result};

const MR: usize = 8;
const NR: usize = 4;

/// `Mᵀ M` for an `m x k` matrix, upper triangle computed and mirrored.
pub fn gram(m: &DenseMatrix) -> Result<GramMatrix> {
    let (rows, k) = (m.rows(), m.cols());
    if rows == 0 || k == 0 {
        return Err(NmfError::invalid("gram of an empty matrix"));
    }
    let rm = m.to_row_major();
    let mut upper = vec![0.0; k * k];
    for r in 0..rows {
        let row = &rm[r * k..(r + 1) * k];
        for a in 0..k {
            let ra = row[a];
            let acc = &mut upper[a * k + a..a * k + k];
            for (dst, &rb) in acc.iter_mut().zip(&row[a..]) {
                *dst += ra * rb;
            }
        }
    }
    // upper[a * k + b] holds (a, b) for b >= a
    let mut values = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v = upper[a * k + b];
            values[a + b * k] = v;
            values[b + a * k] = v;
        }
    }
    GramMatrix::from_values(k, values)
}

/// `A · Hᵀ` where the caller passes `Hᵀ` as an `n x k` matrix.
pub fn mm_a_ht<'a>(a: impl Into<MatRef<'a>>, ht: &DenseMatrix) -> Result<DenseMatrix> {
    let a = a.into();
    if a.cols() != ht.rows() {
        return Err(NmfError::invalid(format!(
            "A is {}x{} but Hᵀ is {}x{}",
            a.rows(),
            a.cols(),
            ht.rows(),
            ht.cols()
        )));
    }
    Ok(match a {
        MatRef::Dense(d) => dense_a_ht(d, ht),
        MatRef::Sparse(s) => sparse_a_ht(s, ht),
    })
}

/// `Wᵀ · A`, a `k x n` result.
pub fn mm_wt_a<'a>(w: &DenseMatrix, a: impl Into<MatRef<'a>>) -> Result<DenseMatrix> {
    let a = a.into();
    if w.rows() != a.rows() {
        return Err(NmfError::invalid(format!(
            "W is {}x{} but A is {}x{}",
            w.rows(),
            w.cols(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(match a {
        MatRef::Dense(d) => dense_wt_a(w, d),
        MatRef::Sparse(s) => sparse_wt_a(w, s),
    })
}

pub fn frobenius_sq<'a>(m: impl Into<MatRef<'a>>) -> f64 {
    match m.into() {
        MatRef::Dense(d) => d.frobenius_sq(),
        MatRef::Sparse(s) => s.frobenius_sq(),
    }
}

fn dense_a_ht(a: &DenseMatrix, ht: &DenseMatrix) -> DenseMatrix {
    let (m, n, k) = (a.rows(), a.cols(), ht.cols());
    let av = a.values();
    let hv = ht.values();
    let mut out = DenseMatrix::zeros(m, k);
    let ov = out.values_mut();
    for i0 in (0..m).step_by(MR) {
        let mr = MR.min(m - i0);
        for j0 in (0..k).step_by(NR) {
            let nr = NR.min(k - j0);
            if mr == MR && nr == NR {
                let mut acc = [[0.0f64; MR]; NR];
                for l in 0..n {
                    let a_col: &[f64; MR] = av[l * m + i0..l * m + i0 + MR].try_into().unwrap();
                    for (jj, acc_j) in acc.iter_mut().enumerate() {
                        let b = hv[l + (j0 + jj) * n];
                        for ii in 0..MR {
                            acc_j[ii] += a_col[ii] * b;
                        }
                    }
                }
                for (jj, acc_j) in acc.iter().enumerate() {
                    ov[(j0 + jj) * m + i0..(j0 + jj) * m + i0 + MR].copy_from_slice(acc_j);
                }
            } else {
                for jj in 0..nr {
                    for ii in 0..mr {
                        let mut s = 0.0;
                        for l in 0..n {
                            s += av[l * m + i0 + ii] * hv[l + (j0 + jj) * n];
                        }
                        ov[(j0 + jj) * m + i0 + ii] = s;
                    }
                }
            }
        }
    }
    out
}

fn sparse_a_ht(a: &SparseMatrix, ht: &DenseMatrix) -> DenseMatrix {
    let (m, n, k) = (a.rows(), a.cols(), ht.cols());
    let hv = ht.values();
    let mut out = DenseMatrix::zeros(m, k);
    let ov = out.values_mut();
    for l in 0..n {
        let (idx, vals) = a.col(l);
        for (&i, &v) in idx.iter().zip(vals) {
            for j in 0..k {
                ov[i + j * m] += v * hv[l + j * n];
            }
        }
    }
    out
}

fn dense_wt_a(w: &DenseMatrix, a: &DenseMatrix) -> DenseMatrix {
    let (m, k, n) = (w.rows(), w.cols(), a.cols());
    let wr = w.to_row_major();
    let av = a.values();
    let mut out = DenseMatrix::zeros(k, n);
    let ov = out.values_mut();
    for c0 in (0..n).step_by(NR) {
        let nc = NR.min(n - c0);
        for a0 in (0..k).step_by(MR) {
            let na = MR.min(k - a0);
            if nc == NR && na == MR {
                let mut acc = [[0.0f64; MR]; NR];
                for r in 0..m {
                    let wrow: &[f64; MR] = wr[r * k + a0..r * k + a0 + MR].try_into().unwrap();
                    for (cc, acc_c) in acc.iter_mut().enumerate() {
                        let x = av[r + (c0 + cc) * m];
                        for aa in 0..MR {
                            acc_c[aa] += wrow[aa] * x;
                        }
                    }
                }
                for (cc, acc_c) in acc.iter().enumerate() {
                    ov[(c0 + cc) * k + a0..(c0 + cc) * k + a0 + MR].copy_from_slice(acc_c);
                }
            } else {
                for cc in 0..nc {
                    let acol = &av[(c0 + cc) * m..(c0 + cc + 1) * m];
                    for aa in 0..na {
                        let mut s = 0.0;
                        for r in 0..m {
                            s += wr[r * k + a0 + aa] * acol[r];
                        }
                        ov[(c0 + cc) * k + a0 + aa] = s;
                    }
                }
            }
        }
    }
    out
}

fn sparse_wt_a(w: &DenseMatrix, a: &SparseMatrix) -> DenseMatrix {
    let (k, n) = (w.cols(), a.cols());
    let wr = w.to_row_major();
    let mut out = DenseMatrix::zeros(k, n);
    let ov = out.values_mut();
    for c in 0..n {
        let (idx, vals) = a.col(c);
        let dst = &mut ov[c * k..(c + 1) * k];
        for (&r, &v) in idx.iter().zip(vals) {
            let wrow = &wr[r * k..(r + 1) * k];
            for (d, &wv) in dst.iter_mut().zip(wrow) {
                *d += wv * v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseMatrix;
    use crate::rng::PortableRng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let rng = PortableRng::new(seed);
        DenseMatrix::from_fn(rows, cols, |i, j| rng.uniform(0, i as u64, j as u64))
    }

    /// Plain triple loop, ascending inner index.
    fn oracle_product(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            let mut s = 0.0;
            for l in 0..a.cols() {
                s += a.get(i, l) * b.get(l, j);
            }
            s
        })
    }

    #[test]
    fn gram_examples() {
        let g = gram(&DenseMatrix::identity(2)).unwrap();
        assert_eq!(g.to_dense(), DenseMatrix::identity(2));

        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let g = gram(&m).unwrap();
        assert_eq!(
            g.to_dense(),
            DenseMatrix::from_rows(&[[10.0, 14.0], [14.0, 20.0]]).unwrap()
        );

        let ones = DenseMatrix::from_fn(5, 1, |_, _| 1.0);
        assert_eq!(gram(&ones).unwrap().values(), &[5.0]);
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        let m = random(37, 9, 3);
        let g = gram(&m).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                assert_eq!(g.get(a, b).to_bits(), g.get(b, a).to_bits());
            }
        }
    }

    #[test]
    fn a_ht_examples() {
        let ht = random(3, 2, 1);
        let out = mm_a_ht(&DenseMatrix::identity(3), &ht).unwrap();
        assert_eq!(out, ht);

        let a = SparseMatrix::from_triplets(3, 3, &[(1, 2, 5.0)]).unwrap();
        let ht = DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 2.0]]).unwrap();
        let out = mm_a_ht(&a, &ht).unwrap();
        let expect = DenseMatrix::from_rows(&[[0.0, 0.0], [5.0, 10.0], [0.0, 0.0]]).unwrap();
        assert_eq!(out, expect);

        let a = random(4, 3, 5);
        let ht = random(3, 2, 6);
        assert_eq!(mm_a_ht(&a, &ht).unwrap(), oracle_product(&a, &ht));
    }

    #[test]
    fn a_ht_tiled_path_matches_oracle_exactly() {
        // 19x7 times 7x9 exercises full tiles and both remainders
        let a = random(19, 7, 11);
        let ht = random(7, 9, 12);
        assert_eq!(mm_a_ht(&a, &ht).unwrap(), oracle_product(&a, &ht));
    }

    #[test]
    fn wt_a_examples() {
        let a = random(2, 3, 8);
        assert_eq!(mm_wt_a(&DenseMatrix::identity(2), &a).unwrap(), a);

        let a = random(6, 4, 9);
        let ones = DenseMatrix::from_fn(6, 1, |_, _| 1.0);
        let sums = mm_wt_a(&ones, &a).unwrap();
        for c in 0..4 {
            let s: f64 = a.col(c).iter().sum();
            assert_eq!(sums.get(0, c), s);
        }

        let w = random(13, 10, 4);
        let dense = DenseMatrix::from_fn(13, 9, |i, j| if (i * 7 + j) % 3 == 0 { (i + j) as f64 } else { 0.0 });
        let sparse = SparseMatrix::from_dense(&dense);
        let expect = oracle_product(&w.transpose(), &dense);
        assert_eq!(mm_wt_a(&w, &sparse).unwrap(), expect);
        assert_eq!(mm_wt_a(&w, &dense).unwrap(), expect);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = random(4, 3, 1);
        let bad = random(4, 2, 2);
        assert!(matches!(mm_a_ht(&a, &bad), Err(NmfError::InvalidArgument(_))));
        let w = random(5, 2, 3);
        assert!(matches!(mm_wt_a(&w, &a), Err(NmfError::InvalidArgument(_))));
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_sq(&DenseMatrix::zeros(3, 2)), 0.0);
        assert_eq!(frobenius_sq(&DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap()), 25.0);
        let m = random(5, 4, 2);
        let mut s = 0.0;
        for i in 0..5 {
            for j in 0..4 {
                s += m.get(i, j) * m.get(i, j);
            }
        }
        assert!((frobenius_sq(&m) - s).abs() <= 1e-14 * s);
    }
}
