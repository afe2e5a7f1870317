//! Per-iteration error and timing records.

use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Seconds spent in the six tracked task categories. Matrix products,
/// local updates and Gram products are local work; the rest is time inside
/// collectives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub mm: f64,
    pub luc: f64,
    pub gram: f64,
    #[serde(rename = "allgather")]
    pub all_gather: f64,
    #[serde(rename = "reducescatter")]
    pub reduce_scatter: f64,
    #[serde(rename = "allreduce")]
    pub all_reduce: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Mm,
    Luc,
    Gram,
    AllGather,
    ReduceScatter,
    AllReduce,
}

impl Breakdown {
    pub const KEYS: [&'static str; 6] = ["mm", "luc", "gram", "allgather", "reducescatter", "allreduce"];

    pub fn add(&mut self, task: Task, seconds: f64) {
        *self.slot(task) += seconds;
    }

    fn slot(&mut self, task: Task) -> &mut f64 {
        match task {
            Task::Mm => &mut self.mm,
            Task::Luc => &mut self.luc,
            Task::Gram => &mut self.gram,
            Task::AllGather => &mut self.all_gather,
            Task::ReduceScatter => &mut self.reduce_scatter,
            Task::AllReduce => &mut self.all_reduce,
        }
    }

    /// Runs `f` and charges its wall time to `task`.
    pub fn time<T>(&mut self, task: Task, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.add(task, start.elapsed().as_secs_f64());
        out
    }

    pub fn total(&self) -> f64 {
        self.mm + self.luc + self.gram + self.all_gather + self.reduce_scatter + self.all_reduce
    }

    pub fn values(&self) -> [f64; 6] {
        [self.mm, self.luc, self.gram, self.all_gather, self.reduce_scatter, self.all_reduce]
    }

    /// Entrywise maximum, the usual way to combine per-rank timings.
    pub fn max(&self, other: &Breakdown) -> Breakdown {
        Breakdown {
            mm: self.mm.max(other.mm),
            luc: self.luc.max(other.luc),
            gram: self.gram.max(other.gram),
            all_gather: self.all_gather.max(other.all_gather),
            reduce_scatter: self.reduce_scatter.max(other.reduce_scatter),
            all_reduce: self.all_reduce.max(other.all_reduce),
        }
    }

    pub fn sum(&self, other: &Breakdown) -> Breakdown {
        Breakdown {
            mm: self.mm + other.mm,
            luc: self.luc + other.luc,
            gram: self.gram + other.gram,
            all_gather: self.all_gather + other.all_gather,
            reduce_scatter: self.reduce_scatter + other.reduce_scatter,
            all_reduce: self.all_reduce + other.all_reduce,
        }
    }
}

/// Local floating-point work, by category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub mm_flops: u64,
    pub gram_flops: u64,
    pub luc_flops: u64,
}

impl WorkCounters {
    pub fn total(&self) -> u64 {
        self.mm_flops + self.gram_flops + self.luc_flops
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Error of the starting factors, when it was computed.
    pub initial_rel_error: Option<f64>,
    /// Relative error after each completed iteration.
    pub rel_error: Vec<f64>,
    /// Wall time per iteration.
    pub times: Vec<Breakdown>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.rel_error.len()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.rel_error.last().copied()
    }

    pub fn total_times(&self) -> Breakdown {
        self.times.iter().fold(Breakdown::default(), |acc, b| acc.sum(b))
    }

    /// `iter,rel_error` rows, iterations numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,rel_error\n");
        for (i, e) in self.rel_error.iter().enumerate() {
            s.push_str(&format!("{},{:.17e}\n", i + 1, e));
        }
        s
    }
}
