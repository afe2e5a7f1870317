//! Alpha-beta-gamma cost model for one iteration of either parallel
//! scheme, grid search, and the bandwidth lower bound.
//!
//! Word and message counts use the same per-collective formulas as the
//! communicator's counters, so a modeled iteration and a measured one can
//! be compared exactly.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Serialize, Serializer};

pub use crate::comm::collective_cost;
use crate::comm::{words_f64, CollectiveKind, Words};
use crate::dist::ProcessorGrid;
use crate::error::{NmfError, Result};
use crate::nls::Algorithm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Naive,
    Faun,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Naive => "naive",
            Scheme::Faun => "faun",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Scheme::Naive),
            "faun" | "mpi-faun" | "mpifaun" => Ok(Scheme::Faun),
            _ => Err(NmfError::invalid(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Flops of the local update for an `m x k` and an `n x k` block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LucFlopModel {
    /// `2 (m + n) k²`, shared by MU and HALS.
    Quadratic,
    /// Upper-bound surrogate for block principal pivoting: every one of
    /// the `m + n` right-hand sides pays one `k x k` factorization and a
    /// solve, `k³/3 + k²`. Not a closed form of the real cost.
    BppSurrogate,
}

impl LucFlopModel {
    pub fn for_algorithm(algo: Algorithm) -> Self {
        match algo {
            Algorithm::Mu | Algorithm::Hals => LucFlopModel::Quadratic,
            Algorithm::Bpp => LucFlopModel::BppSurrogate,
        }
    }

    pub fn flops(self, m: f64, n: f64, k: f64) -> f64 {
        match self {
            LucFlopModel::Quadratic => 2.0 * (m + n) * k * k,
            LucFlopModel::BppSurrogate => (m + n) * (k * k * k / 3.0 + k * k),
        }
    }

    pub fn is_surrogate(self) -> bool {
        self == LucFlopModel::BppSurrogate
    }
}

/// Seconds per message, per word and per flop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MachineParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        Self {
            alpha: 1e-6,
            beta: 1e-9,
            gamma: 1e-10,
        }
    }
}

fn ser_words<S: Serializer>(w: &Words, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(words_f64(*w))
}

/// One kind of collective issued during an iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollectiveTerm {
    pub kind: CollectiveKind,
    /// Ranks taking part.
    pub ranks: usize,
    /// Total payload in words.
    #[serde(serialize_with = "ser_words")]
    pub payload: Words,
    #[serde(serialize_with = "ser_words")]
    pub words: Words,
    pub messages: u64,
    pub purpose: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub scheme: Scheme,
    pub grid: ProcessorGrid,
    pub flops: f64,
    #[serde(serialize_with = "ser_words")]
    pub words: Words,
    pub messages: u64,
    pub memory_words: f64,
    pub luc_model: LucFlopModel,
    pub luc_surrogate: bool,
    pub terms: Vec<CollectiveTerm>,
    /// HALS only: messages if each column norm were reduced separately,
    /// `k ⌈log₂ p⌉`, next to the batched single all-reduce counted above.
    pub hals_unbatched_norm_messages: Option<u64>,
}

impl CostReport {
    pub fn words_f64(&self) -> f64 {
        words_f64(self.words)
    }

    pub fn words_of(&self, kind: CollectiveKind) -> Words {
        self.terms.iter().filter(|t| t.kind == kind).fold(Words::zero(), |a, t| a + t.words)
    }

    pub fn messages_of(&self, kind: CollectiveKind) -> u64 {
        self.terms.iter().filter(|t| t.kind == kind).map(|t| t.messages).sum()
    }

    pub fn modeled_seconds(&self, params: &MachineParams) -> f64 {
        params.gamma * self.flops + params.beta * self.words_f64() + params.alpha * self.messages as f64
    }
}

fn term(kind: CollectiveKind, payload: Words, ranks: usize, purpose: &'static str) -> CollectiveTerm {
    let base = payload * Words::new(ranks as u128 - 1, ranks as u128);
    let words = match kind {
        CollectiveKind::AllReduce => base * 2,
        _ => base,
    };
    let messages = collective_cost(kind, 0, ranks).1;
    CollectiveTerm {
        kind,
        ranks,
        payload,
        words,
        messages,
        purpose,
    }
}

fn ceil_log2(p: usize) -> u64 {
    collective_cost(CollectiveKind::AllGather, 0, p).1
}

/// Modeled cost of one iteration on `p` ranks arranged as `grid`.
pub fn per_iter_cost(
    scheme: Scheme,
    m: usize,
    n: usize,
    k: usize,
    p: usize,
    grid: ProcessorGrid,
    algo: Algorithm,
) -> Result<CostReport> {
    if m == 0 || n == 0 || k == 0 {
        return Err(NmfError::invalid("dimensions must be at least 1"));
    }
    if grid.p() != p {
        return Err(NmfError::invalid(format!("grid {grid} does not have {p} ranks")));
    }
    let luc = LucFlopModel::for_algorithm(algo);
    let (mf, nf, kf, pf) = (m as f64, n as f64, k as f64, p as f64);
    let (mw, nw, kw) = (m as u128, n as u128, k as u128);
    let (pr, pc) = (grid.pr as u128, grid.pc as u128);
    let mut terms = Vec::new();
    let hals = algo == Algorithm::Hals;
    let (flops, memory_words) = match scheme {
        Scheme::Faun => {
            terms.push(term(CollectiveKind::AllReduce, Words::from(kw * kw), p, "H Hᵀ"));
            terms.push(term(CollectiveKind::AllGather, Words::new(nw * kw, pc), grid.pr, "H_j"));
            terms.push(term(CollectiveKind::ReduceScatter, Words::new(mw * kw, pr), grid.pc, "A Hᵀ"));
            if hals {
                terms.push(term(CollectiveKind::AllReduce, Words::from(kw), p, "W column norms"));
            }
            terms.push(term(CollectiveKind::AllReduce, Words::from(kw * kw), p, "Wᵀ W"));
            terms.push(term(CollectiveKind::AllGather, Words::new(mw * kw, pr), grid.pc, "W_i"));
            terms.push(term(CollectiveKind::ReduceScatter, Words::new(nw * kw, pc), grid.pr, "Wᵀ A"));
            (
                4.0 * mf * nf * kf / pf + (mf + nf) * kf * kf / pf + luc.flops(mf / pf, nf / pf, kf),
                mf * nf / pf
                    + (mf + nf) * kf / pf
                    + 2.0 * mf * kf / grid.pr as f64
                    + 2.0 * nf * kf / grid.pc as f64,
            )
        }
        Scheme::Naive => {
            terms.push(term(CollectiveKind::AllGather, Words::from(nw * kw), p, "H"));
            if hals {
                terms.push(term(CollectiveKind::AllReduce, Words::from(kw), p, "W column norms"));
            }
            terms.push(term(CollectiveKind::AllGather, Words::from(mw * kw), p, "W"));
            (
                4.0 * mf * nf * kf / pf + (mf + nf) * kf * kf + luc.flops(mf / pf, nf / pf, kf),
                2.0 * mf * nf / pf + (mf + nf) * kf / pf + (mf + nf) * kf,
            )
        }
    };
    let words = terms.iter().fold(Words::zero(), |a, t| a + t.words);
    let messages = terms.iter().map(|t| t.messages).sum();
    Ok(CostReport {
        scheme,
        grid,
        flops,
        words,
        messages,
        memory_words,
        luc_model: luc,
        luc_surrogate: luc.is_surrogate(),
        terms,
        hals_unbatched_norm_messages: hals.then(|| k as u64 * ceil_log2(p)),
    })
}

/// Words some rank must move per iteration of any AU-NMF scheme that
/// loads its inputs evenly: `min(sqrt(m n k² / p), n k)` with `m ≥ n`.
/// `None` unless `k < n` and `k < sqrt(m n / p)`.
pub fn bandwidth_lower_bound(m: usize, n: usize, k: usize, p: usize) -> Option<f64> {
    let (m, n) = if m >= n { (m, n) } else { (n, m) };
    let (mf, nf, kf, pf) = (m as f64, n as f64, k as f64, p.max(1) as f64);
    if p == 0 || k >= n || kf >= (mf * nf / pf).sqrt() {
        return None;
    }
    Some((mf * nf * kf * kf / pf).sqrt().min(nf * kf))
}

/// The divisor pair of `p` with the fewest modeled words per iteration,
/// ties going to the smaller `p_r`.
pub fn optimize_grid_exhaustive(m: usize, n: usize, k: usize, p: usize) -> Result<ProcessorGrid> {
    if p == 0 {
        return Err(NmfError::invalid("p must be at least 1"));
    }
    let mut best: Option<(Words, ProcessorGrid)> = None;
    for g in ProcessorGrid::divisor_pairs(p) {
        let w = per_iter_cost(Scheme::Faun, m, n, k, p, g, Algorithm::Mu)?.words;
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, g));
        }
    }
    Ok(best.expect("p has a divisor pair").1)
}
