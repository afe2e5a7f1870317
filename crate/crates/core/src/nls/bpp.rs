//! Block principal pivoting for nonnegative least squares with many
//! right-hand sides.

use std::collections::BTreeMap;

use super::{ActiveSetPartition, NlsProblem};
use crate::error::{NmfError, Result};
use crate::matrix::DenseMatrix;

/// Exchanges allowed per column, as a multiple of `k`.
pub const EXCHANGE_CAP_PER_K: usize = 5;

const SPD_FLOOR: f64 = 1e-10;
const SUBSYSTEM_FLOOR: f64 = 1e-13;
const VIOLATION_TOL: f64 = 1e-12;
const BACKUP_ROUNDS: usize = 3;

#[derive(Clone, Debug)]
pub struct BppOutcome {
    /// `k x c` solution, entrywise nonnegative.
    pub x: DenseMatrix,
    pub partition: ActiveSetPartition,
    /// Columns whose passive subsystem was numerically singular; returned as zero.
    pub degenerate_columns: Vec<usize>,
    /// Total exchange rounds over all columns.
    pub exchanges: usize,
    pub flops: u64,
}

/// Solves `min ‖C x − b‖, x ≥ 0` for each column given `CᵀC` and `CᵀB`.
pub fn solve_bpp(problem: &NlsProblem) -> Result<DenseMatrix> {
    solve_bpp_detailed(problem).map(|o| o.x)
}

struct ColumnState {
    x: Vec<f64>,
    y: Vec<f64>,
    ninf: usize,
    backup: usize,
    exchanges: usize,
    best_violations: usize,
    best_x: Vec<f64>,
    done: bool,
}

pub fn solve_bpp_detailed(problem: &NlsProblem) -> Result<BppOutcome> {
    let k = problem.k();
    let c = problem.c();
    let g = problem.gram();
    let trace = g.trace();
    let mut flops = (k * k * k / 3) as u64;
    if cholesky(g.values(), k, SPD_FLOOR * trace).is_none() {
        return Err(NmfError::invalid("gram matrix is not positive definite"));
    }
    let rhs = problem.rhs();
    if !rhs.is_finite() {
        return Err(NmfError::invalid("right-hand side has non-finite entries"));
    }

    let mut partition = ActiveSetPartition::new(k, c);
    let mut states: Vec<ColumnState> = (0..c)
        .map(|j| {
            let b = rhs.col(j);
            ColumnState {
                x: vec![0.0; k],
                y: b.iter().map(|v| -v).collect(),
                ninf: k + 1,
                backup: BACKUP_ROUNDS,
                exchanges: 0,
                best_violations: usize::MAX,
                best_x: vec![0.0; k],
                done: false,
            }
        })
        .collect();
    let mut degenerate = Vec::new();
    let mut failed = Vec::new();
    let cap = EXCHANGE_CAP_PER_K * k;
    let mut total_exchanges = 0;
    let mut violating = Vec::with_capacity(k);

    loop {
        let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
        for (j, st) in states.iter_mut().enumerate() {
            if st.done {
                continue;
            }
            let b = rhs.col(j);
            let xtol = VIOLATION_TOL * (1.0 + st.x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            let ytol = VIOLATION_TOL * (1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            let passive = partition.column_mut(j);
            violating.clear();
            for i in 0..k {
                if (passive[i] && st.x[i] < -xtol) || (!passive[i] && st.y[i] < -ytol) {
                    violating.push(i);
                }
            }
            if violating.len() < st.best_violations {
                st.best_violations = violating.len();
                st.best_x.clone_from(&st.x);
            }
            if violating.is_empty() {
                st.done = true;
                continue;
            }
            if st.exchanges >= cap {
                st.done = true;
                failed.push(j);
                continue;
            }
            if violating.len() < st.ninf {
                st.ninf = violating.len();
                st.backup = BACKUP_ROUNDS;
                violating.iter().for_each(|&i| passive[i] = !passive[i]);
            } else if st.backup > 0 {
                st.backup -= 1;
                violating.iter().for_each(|&i| passive[i] = !passive[i]);
            } else {
                let i = violating[0];
                passive[i] = !passive[i];
            }
            st.exchanges += 1;
            total_exchanges += 1;
            groups.entry(passive.to_vec()).or_default().push(j);
        }
        if groups.is_empty() {
            break;
        }
        for (mask, cols) in groups {
            let idx: Vec<usize> = (0..k).filter(|&i| mask[i]).collect();
            let kf = idx.len();
            let factor = if kf == 0 {
                Some(Vec::new())
            } else {
                let sub: Vec<f64> = idx
                    .iter()
                    .flat_map(|&b| idx.iter().map(move |&a| (a, b)))
                    .map(|(a, b)| g.get(a, b))
                    .collect();
                flops += (kf * kf * kf / 3) as u64;
                cholesky(&sub, kf, SUBSYSTEM_FLOOR * trace)
            };
            for j in cols {
                let st = &mut states[j];
                let Some(l) = factor.as_ref() else {
                    st.x.iter_mut().for_each(|v| *v = 0.0);
                    st.done = true;
                    degenerate.push(j);
                    continue;
                };
                let b = rhs.col(j);
                let mut sol: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
                cholesky_solve(l, kf, &mut sol);
                st.x.iter_mut().for_each(|v| *v = 0.0);
                for (&i, &v) in idx.iter().zip(&sol) {
                    st.x[i] = v;
                }
                for i in 0..k {
                    st.y[i] = if mask[i] {
                        0.0
                    } else {
                        let mut s = 0.0;
                        for &a in &idx {
                            s += g.get(i, a) * st.x[a];
                        }
                        s - b[i]
                    };
                }
                flops += (2 * kf * kf + 2 * (k - kf) * kf) as u64;
            }
        }
    }

    if !failed.is_empty() {
        let best = DenseMatrix::from_fn(k, c, |i, j| states[j].best_x[i].max(0.0));
        return Err(NmfError::NoConvergence {
            iterations: cap,
            columns: failed,
            best: Box::new(best),
        });
    }
    degenerate.sort_unstable();
    for &j in &degenerate {
        partition.column_mut(j).iter_mut().for_each(|p| *p = false);
    }
    let x = DenseMatrix::from_fn(k, c, |i, j| states[j].x[i].max(0.0));
    Ok(BppOutcome {
        x,
        partition,
        degenerate_columns: degenerate,
        exchanges: total_exchanges,
        flops,
    })
}

/// Lower Cholesky factor of a column-major `n x n` matrix, or `None` when
/// a pivot drops to `floor` or below.
pub(crate) fn cholesky(a: &[f64], n: usize, floor: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j + j * n];
        for p in 0..j {
            d -= l[j + p * n] * l[j + p * n];
        }
        if !(d > floor) {
            return None;
        }
        let d = d.sqrt();
        l[j + j * n] = d;
        for i in j + 1..n {
            let mut s = a[i + j * n];
            for p in 0..j {
                s -= l[i + p * n] * l[j + p * n];
            }
            l[i + j * n] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` in place.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i + p * n] * b[p];
        }
        b[i] = s / l[i + i * n];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in i + 1..n {
            s -= l[p + i * n] * b[p];
        }
        b[i] = s / l[i + i * n];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{gram, GramMatrix};
    use crate::nls::kkt_residual;
    use crate::rng::PortableRng;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn problem(g: GramMatrix, rhs: DenseMatrix) -> NlsProblem {
        NlsProblem::new(g, rhs).unwrap()
    }

    /// Every passive set, solved with nalgebra; keeps the KKT point.
    fn exhaustive(g: &GramMatrix, b: &[f64]) -> Vec<f64> {
        let k = g.k();
        let gm = DMatrix::from_column_slice(k, k, g.values());
        let bv = DVector::from_column_slice(b);
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << k) {
            let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let mut x = DVector::zeros(k);
            if !idx.is_empty() {
                let sub = gm.select_rows(&idx).select_columns(&idx);
                let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| b[i]));
                let sol = sub.lu().solve(&rhs).unwrap();
                for (&i, v) in idx.iter().zip(sol.iter()) {
                    x[i] = *v;
                }
            }
            let y = &gm * &x - &bv;
            let viol = (0..k)
                .map(|i| (-x[i]).max(-y[i]).max((x[i] * y[i]).abs()))
                .fold(0.0f64, f64::max)
                / scale;
            if best.as_ref().is_none_or(|(v, _)| viol < *v) {
                best = Some((viol, x.iter().copied().collect()));
            }
        }
        let (viol, x) = best.unwrap();
        assert!(viol <= 1e-9, "oracle found no KKT point");
        x
    }

    fn random_spd(seed: u64, k: usize) -> GramMatrix {
        let rng = PortableRng::new(seed);
        let c = DenseMatrix::from_fn(2 * k + 3, k, |i, j| rng.uniform(11, i as u64, j as u64) - 0.3);
        gram(&c).unwrap()
    }

    fn random_rhs(seed: u64, k: usize, c: usize) -> DenseMatrix {
        let rng = PortableRng::new(seed);
        DenseMatrix::from_fn(k, c, |i, j| 2.0 * rng.uniform(12, i as u64, j as u64) - 1.0)
    }

    #[test]
    fn unconstrained_optimum() {
        let p = problem(GramMatrix::identity(2), DenseMatrix::from_rows(&[[1.0], [2.0]]).unwrap());
        assert_eq!(solve_bpp(&p).unwrap().values(), &[1.0, 2.0]);
    }

    #[test]
    fn clamped_coordinate() {
        let p = problem(GramMatrix::identity(2), DenseMatrix::from_rows(&[[-1.0], [2.0]]).unwrap());
        let out = solve_bpp_detailed(&p).unwrap();
        assert_eq!(out.x.values(), &[0.0, 2.0]);
        assert!(!out.partition.is_passive(0, 0));
        assert!(out.partition.is_passive(1, 0));
    }

    #[test]
    fn matches_exhaustive_oracle_k4() {
        let g = random_spd(5, 4);
        let rhs = random_rhs(6, 4, 3);
        let x = solve_bpp(&problem(g.clone(), rhs.clone())).unwrap();
        for j in 0..3 {
            let expect = exhaustive(&g, rhs.col(j));
            for (a, b) in x.col(j).iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn non_spd_rejected() {
        let g = GramMatrix::from_values(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let p = problem(g, DenseMatrix::from_rows(&[[1.0], [1.0]]).unwrap());
        assert!(matches!(solve_bpp(&p), Err(NmfError::InvalidArgument(_))));
    }

    #[test]
    fn solution_satisfies_kkt() {
        let g = random_spd(8, 6);
        let rhs = random_rhs(9, 6, 20);
        let p = problem(g, rhs);
        let x = solve_bpp(&p).unwrap();
        assert!(kkt_residual(&p, &x).unwrap() <= 1e-10);
    }

    #[test]
    fn cholesky_roundtrip() {
        let g = random_spd(1, 5);
        let l = cholesky(g.values(), 5, 0.0).unwrap();
        let mut b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let orig = b.clone();
        cholesky_solve(&l, 5, &mut b);
        for i in 0..5 {
            let r: f64 = (0..5).map(|a| g.get(i, a) * b[a]).sum();
            assert!((r - orig[i]).abs() <= 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_exhaustive_oracle(seed in any::<u64>(), k in 1usize..=6) {
            let g = random_spd(seed, k);
            let rhs = random_rhs(seed ^ 0x5a5a, k, 2);
            let x = solve_bpp(&problem(g.clone(), rhs.clone())).unwrap();
            prop_assert!(x.is_nonnegative());
            for j in 0..2 {
                let expect = exhaustive(&g, rhs.col(j));
                for (a, b) in x.col(j).iter().zip(&expect) {
                    prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
                }
            }
        }

        #[test]
        fn column_permutation_invariance(seed in any::<u64>(), shift in 1usize..7) {
            let k = 5;
            let c = 7;
            let g = random_spd(seed, k);
            let rhs = random_rhs(seed.wrapping_add(1), k, c);
            let perm: Vec<usize> = (0..c).map(|j| (j + shift) % c).collect();
            let permuted = DenseMatrix::from_fn(k, c, |i, j| rhs.get(i, perm[j]));
            let x = solve_bpp(&problem(g.clone(), rhs)).unwrap();
            let xp = solve_bpp(&problem(g, permuted)).unwrap();
            for j in 0..c {
                for i in 0..k {
                    prop_assert!((xp.get(i, j) - x.get(i, perm[j])).abs() <= 1e-10);
                }
            }
        }
    }
}
