use serde::Serialize;

use faun_core::comm::{words_f64, CollectiveKind, CommCounters};
use faun_core::dist::ProcessorGrid;
use faun_core::{Breakdown, IterationTrace};

use crate::args::{Impl, ProblemArgs};

/// Traffic of the busiest rank over the whole run.
#[derive(Clone, Debug, Serialize)]
pub struct CounterSummary {
    pub words: f64,
    pub messages: u64,
    pub calls: u64,
    #[serde(flatten)]
    pub by_kind: CommCounters,
}

/// The `--report` JSON document, also one row of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    #[serde(rename = "impl")]
    pub implementation: &'static str,
    pub algo: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub ranks: usize,
    #[serde(serialize_with = "ser_grid")]
    pub grid: Option<ProcessorGrid>,
    pub seed: u64,
    pub iterations: usize,
    pub initial_rel_error: Option<f64>,
    pub final_rel_error: Option<f64>,
    /// Seconds per category summed over iterations; each iteration counts
    /// its slowest rank.
    pub breakdown: Breakdown,
    pub counters: CounterSummary,
    /// Largest per-rank flop count.
    pub flops_per_rank: u64,
}

fn ser_grid<S: serde::Serializer>(g: &Option<ProcessorGrid>, s: S) -> Result<S::Ok, S::Error> {
    match g {
        Some(g) => s.serialize_str(&g.to_string()),
        None => s.serialize_none(),
    }
}

impl RunReport {
    pub fn new(
        p: &ProblemArgs,
        m: usize,
        n: usize,
        grid: Option<ProcessorGrid>,
        trace: &IterationTrace,
        counters: &CommCounters,
        flops_per_rank: u64,
    ) -> Self {
        RunReport {
            implementation: match p.implementation {
                Impl::Seq => "seq",
                Impl::Naive => "naive",
                Impl::Faun => "faun",
            },
            algo: p.algo.to_string(),
            m,
            n,
            k: p.k,
            ranks: p.ranks,
            grid,
            seed: p.seed,
            iterations: trace.iterations(),
            initial_rel_error: trace.initial_rel_error,
            final_rel_error: trace.final_error(),
            breakdown: trace.total_times(),
            counters: CounterSummary {
                words: words_f64(counters.words()),
                messages: counters.messages(),
                calls: counters.calls(),
                by_kind: *counters,
            },
            flops_per_rank,
        }
    }

    pub const CSV_HEADER: &'static str = "impl,algo,m,n,k,ranks,grid,iterations,final_rel_error,\
mm,luc,gram,allgather,reducescatter,allreduce,words,messages,\
allgather_words,reducescatter_words,allreduce_words,flops_per_rank";

    pub fn csv_row(&self) -> String {
        let b = self.breakdown.values().map(|v| format!("{v:.6e}")).join(",");
        let kind = |k: CollectiveKind| words_f64(self.counters.by_kind.get(k).words);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.implementation,
            self.algo,
            self.m,
            self.n,
            self.k,
            self.ranks,
            self.grid.map(|g| g.to_string()).unwrap_or_default(),
            self.iterations,
            self.final_rel_error.map(|e| format!("{e:.17e}")).unwrap_or_default(),
            b,
            self.counters.words,
            self.counters.messages,
            kind(CollectiveKind::AllGather),
            kind(CollectiveKind::ReduceScatter),
            kind(CollectiveKind::AllReduce),
            self.flops_per_rank,
        )
    }
}
