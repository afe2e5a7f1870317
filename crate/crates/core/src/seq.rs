//! Sequential AU-NMF driver. It is also the reference the distributed
//! schemes are checked against.

use std::time::Instant;

use crate::error::{NmfError, Result};
use crate::matrix::{gram, mm_a_ht, mm_wt_a, DenseMatrix, GramMatrix, MatRef};
use crate::nls::{normalize_columns, reset_columns, update_block, Algorithm};
use crate::rng::{stream, PortableRng};
use crate::trace::{Breakdown, IterationTrace, Task, WorkCounters};

/// Starting factors supplied by the caller instead of the generator.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialFactors {
    /// `m x k`.
    pub w: DenseMatrix,
    /// `n x k`, i.e. `Hᵀ`.
    pub ht: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmfConfig {
    pub k: usize,
    pub max_iters: usize,
    pub algo: Algorithm,
    pub seed: u64,
    /// Stop once an iteration improves the error by less than this.
    pub tolerance: Option<f64>,
    pub initial: Option<InitialFactors>,
    /// Keep a copy of both factors after every iteration.
    pub record_history: bool,
}

impl NmfConfig {
    pub fn new(k: usize, max_iters: usize, algo: Algorithm, seed: u64) -> Self {
        Self {
            k,
            max_iters,
            algo,
            seed,
            tolerance: None,
            initial: None,
            record_history: false,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_history(mut self) -> Self {
        self.record_history = true;
        self
    }

    /// `w` is `m x k` and `h` is `k x n`.
    pub fn with_initial(mut self, w: DenseMatrix, h: &DenseMatrix) -> Self {
        self.initial = Some(InitialFactors { w, ht: h.transpose() });
        self
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k == 0 || self.max_iters == 0 {
            return Err(NmfError::invalid("k and the iteration count must be at least 1"));
        }
        if self.k > m.min(n) {
            return Err(NmfError::invalid(format!("k = {} exceeds min(m, n) = {}", self.k, m.min(n))));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return Err(NmfError::invalid("tolerance must be nonnegative"));
            }
        }
        if let Some(init) = &self.initial {
            let ok = init.w.rows() == m && init.w.cols() == self.k && init.ht.rows() == n && init.ht.cols() == self.k;
            if !ok {
                return Err(NmfError::invalid("initial factors do not match the input shape and k"));
            }
            if !init.w.is_nonnegative() || !init.ht.is_nonnegative() {
                return Err(NmfError::invalid("initial factors must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Rows `r0..r1` of the starting `W` for an `m`-row problem; rows at or
    /// past `m` are padding and come back zero.
    pub(crate) fn w_rows(&self, m: usize, r0: usize, r1: usize) -> DenseMatrix {
        self.factor_rows(self.initial.as_ref().map(|i| &i.w), stream::INIT_W, false, m, r0, r1)
    }

    /// Rows `c0..c1` of the starting `Hᵀ`, zero past `n`.
    pub(crate) fn ht_rows(&self, n: usize, c0: usize, c1: usize) -> DenseMatrix {
        self.factor_rows(self.initial.as_ref().map(|i| &i.ht), stream::INIT_H, true, n, c0, c1)
    }

    fn factor_rows(&self, given: Option<&DenseMatrix>, s: u64, transposed: bool, valid: usize, r0: usize, r1: usize) -> DenseMatrix {
        let rng = PortableRng::new(self.seed);
        DenseMatrix::from_fn(r1 - r0, self.k, |i, j| {
            let g = r0 + i;
            if g >= valid {
                return 0.0;
            }
            match given {
                Some(m) => m.get(g, j),
                None if transposed => rng.uniform(s, j as u64, g as u64),
                None => rng.uniform(s, g as u64, j as u64),
            }
        })
    }
}

/// Uniform `[0, 1)` starting factors `W` (`m x k`) and `H` (`k x n`).
pub fn init_factors(m: usize, n: usize, k: usize, seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    if m == 0 || n == 0 || k == 0 {
        return Err(NmfError::invalid("dimensions must be at least 1"));
    }
    let rng = PortableRng::new(seed);
    let w = DenseMatrix::from_fn(m, k, |i, j| rng.uniform(stream::INIT_W, i as u64, j as u64));
    let h = DenseMatrix::from_fn(k, n, |i, j| rng.uniform(stream::INIT_H, i as u64, j as u64));
    Ok((w, h))
}

/// `‖A − W H‖_F / ‖A‖_F` from `‖A‖²`, the two Gram matrices and
/// `t = trace(Wᵀ A Hᵀ)`.
pub fn relative_error(norm_a_sq: f64, gram_w: &GramMatrix, gram_h: &GramMatrix, t: f64) -> Result<f64> {
    if !(norm_a_sq > 0.0) {
        return Err(NmfError::invalid("‖A‖² must be positive"));
    }
    if gram_w.k() != gram_h.k() {
        return Err(NmfError::invalid("Gram matrices differ in order"));
    }
    let s = gram_w.trace_product(gram_h);
    Ok((norm_a_sq - 2.0 * t + s).max(0.0).sqrt() / norm_a_sq.sqrt())
}

/// Same, with `‖A‖ = 0` reported as zero error.
pub(crate) fn guarded_error(norm_a_sq: f64, gram_w: &GramMatrix, gram_h: &GramMatrix, t: f64) -> Result<f64> {
    if norm_a_sq == 0.0 {
        Ok(0.0)
    } else {
        relative_error(norm_a_sq, gram_w, gram_h, t)
    }
}

/// `Σ x ⊙ y` in storage order.
pub(crate) fn inner(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.values().iter().zip(y.values()).map(|(a, b)| a * b).sum()
}

pub(crate) fn gram_flops(rows: usize, k: usize) -> u64 {
    (rows * k * (k + 1)) as u64
}

pub(crate) fn product_flops(a: MatRef<'_>, k: usize) -> u64 {
    let nnz = match a {
        MatRef::Dense(d) => d.rows() * d.cols(),
        MatRef::Sparse(s) => s.nnz(),
    };
    (2 * nnz * k) as u64
}

/// Whether the loop should stop after recording `errors`.
pub(crate) fn should_stop(tolerance: Option<f64>, initial: Option<f64>, errors: &[f64]) -> bool {
    let Some(tol) = tolerance else {
        return false;
    };
    let prev = match errors.len() {
        0 => return false,
        1 => match initial {
            Some(e) => e,
            None => return false,
        },
        n => errors[n - 2],
    };
    prev - errors[errors.len() - 1] < tol
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmfRun {
    /// `m x k`.
    pub w: DenseMatrix,
    /// `n x k`.
    pub ht: DenseMatrix,
    pub trace: IterationTrace,
    pub work: WorkCounters,
    /// `(W, Hᵀ)` after each iteration when requested.
    pub history: Vec<(DenseMatrix, DenseMatrix)>,
}

impl NmfRun {
    /// `k x n`.
    pub fn h(&self) -> DenseMatrix {
        self.ht.transpose()
    }
}

fn starting_error(a: MatRef<'_>, norm_a_sq: f64, w: &DenseMatrix, ht: &DenseMatrix, gh: &GramMatrix) -> Result<f64> {
    let aht = mm_a_ht(a, ht)?;
    guarded_error(norm_a_sq, &gram(w)?, gh, inner(&aht, w))
}

/// Relative error of the starting factors `config` prescribes for `A`.
pub fn initial_rel_error<'a>(a: impl Into<MatRef<'a>>, config: &NmfConfig) -> Result<f64> {
    let a = a.into();
    let (m, n) = (a.rows(), a.cols());
    config.validate(m, n)?;
    let w = config.w_rows(m, 0, m);
    let ht = config.ht_rows(n, 0, n);
    starting_error(a, crate::matrix::frobenius_sq(a), &w, &ht, &gram(&ht)?)
}

/// HALS bookkeeping after a `W` update: normalize the columns, move the
/// norms into `Hᵀ` so `W H` is unchanged, and refill collapsed columns.
pub(crate) fn hals_normalize(
    w: &DenseMatrix,
    global_sums: &[f64],
    ht: &mut DenseMatrix,
    valid_rows: usize,
) -> Result<DenseMatrix> {
    let n = normalize_columns(w, global_sums)?;
    for (j, &norm) in n.norms.iter().enumerate() {
        if norm != 1.0 {
            ht.col_mut(j).iter_mut().for_each(|v| *v *= norm);
        }
    }
    let mut block = n.block;
    reset_columns(&mut block, &n.flagged, valid_rows);
    Ok(block)
}

/// Runs alternating updates on `A` (`m x n`) until the iteration budget or
/// the tolerance is exhausted.
pub fn aunmf_run<'a>(a: impl Into<MatRef<'a>>, config: &NmfConfig) -> Result<NmfRun> {
    let a = a.into();
    let (m, n, k) = (a.rows(), a.cols(), config.k);
    config.validate(m, n)?;
    if !match a {
        MatRef::Dense(d) => d.is_nonnegative(),
        MatRef::Sparse(s) => s.is_nonnegative(),
    } {
        return Err(NmfError::invalid("input matrix has negative entries"));
    }
    let norm_a_sq = crate::matrix::frobenius_sq(a);
    let mut w = config.w_rows(m, 0, m);
    let mut ht = config.ht_rows(n, 0, n);
    let mut work = WorkCounters::default();
    let mut trace = IterationTrace::default();
    let mut history = Vec::new();

    let mut gh = gram(&ht)?;
    trace.initial_rel_error = Some(starting_error(a, norm_a_sq, &w, &ht, &gh)?);

    for it in 0..config.max_iters {
        let at = |e: NmfError| e.at_iteration(it, None);
        let mut times = Breakdown::default();

        let aht = times.time(Task::Mm, || mm_a_ht(a, &ht)).map_err(at)?;
        work.mm_flops += product_flops(a, k);
        let up = times.time(Task::Luc, || update_block(config.algo, &gh, &aht, &w)).map_err(at)?;
        work.luc_flops += up.flops;
        w = up.block;
        if let Some(sums) = up.col_sum_sq {
            let start = Instant::now();
            w = hals_normalize(&w, &sums, &mut ht, m).map_err(at)?;
            times.add(Task::Luc, start.elapsed().as_secs_f64());
        }

        let gw = times.time(Task::Gram, || gram(&w)).map_err(at)?;
        work.gram_flops += gram_flops(m, k);
        let rhs = times.time(Task::Mm, || mm_wt_a(&w, a).map(|x| x.transpose())).map_err(at)?;
        work.mm_flops += product_flops(a, k);
        let up = times.time(Task::Luc, || update_block(config.algo, &gw, &rhs, &ht)).map_err(at)?;
        work.luc_flops += up.flops;
        ht = up.block;

        gh = times.time(Task::Gram, || gram(&ht)).map_err(at)?;
        work.gram_flops += gram_flops(n, k);
        trace.rel_error.push(guarded_error(norm_a_sq, &gw, &gh, inner(&rhs, &ht)).map_err(at)?);
        trace.times.push(times);
        if config.record_history {
            history.push((w.clone(), ht.clone()));
        }
        if should_stop(config.tolerance, trace.initial_rel_error, &trace.rel_error) {
            break;
        }
    }
    Ok(NmfRun {
        w,
        ht,
        trace,
        work,
        history,
    })
}
