use std::fmt;
use std::ops::{AddAssign, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::NmfError;

/// Exact word counts; `(p − 1) / p · n` is rarely an integer per call.
pub type Words = Ratio<u128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectiveKind {
    AllGather,
    ReduceScatter,
    AllReduce,
}

impl CollectiveKind {
    pub const ALL: [CollectiveKind; 3] = [
        CollectiveKind::AllGather,
        CollectiveKind::ReduceScatter,
        CollectiveKind::AllReduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CollectiveKind::AllGather => "allgather",
            CollectiveKind::ReduceScatter => "reducescatter",
            CollectiveKind::AllReduce => "allreduce",
        }
    }
}

impl fmt::Display for CollectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CollectiveKind {
    type Err = NmfError;

    fn from_str(s: &str) -> Result<Self, NmfError> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "allgather" => Ok(CollectiveKind::AllGather),
            "reducescatter" => Ok(CollectiveKind::ReduceScatter),
            "allreduce" => Ok(CollectiveKind::AllReduce),
            _ => Err(NmfError::invalid(format!("unknown collective `{s}`"))),
        }
    }
}

fn ceil_log2(p: usize) -> u64 {
    if p <= 1 {
        0
    } else {
        (usize::BITS - (p - 1).leading_zeros()) as u64
    }
}

/// Modeled cost of one collective over `p` ranks on `n` words of total
/// payload: `((p − 1) / p) · n` words and `⌈log₂ p⌉` messages, both doubled
/// for all-reduce.
pub fn collective_cost(kind: CollectiveKind, n: u64, p: usize) -> (Words, u64) {
    assert!(p >= 1, "communicator size must be at least 1");
    let base = Words::new((p as u128 - 1) * n as u128, p as u128);
    let msgs = ceil_log2(p);
    match kind {
        CollectiveKind::AllReduce => (base * 2, 2 * msgs),
        _ => (base, msgs),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindCounters {
    pub calls: u64,
    pub words: Words,
    pub messages: u64,
}

impl Serialize for KindCounters {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("KindCounters", 3)?;
        st.serialize_field("calls", &self.calls)?;
        st.serialize_field("words", &words_f64(self.words))?;
        st.serialize_field("messages", &self.messages)?;
        st.end()
    }
}

pub fn words_f64(w: Words) -> f64 {
    *w.numer() as f64 / *w.denom() as f64
}

impl Sub for KindCounters {
    type Output = KindCounters;

    fn sub(self, rhs: KindCounters) -> KindCounters {
        KindCounters {
            calls: self.calls - rhs.calls,
            words: self.words - rhs.words,
            messages: self.messages - rhs.messages,
        }
    }
}

impl AddAssign for KindCounters {
    fn add_assign(&mut self, rhs: KindCounters) {
        self.calls += rhs.calls;
        self.words += rhs.words;
        self.messages += rhs.messages;
    }
}

/// Modeled traffic charged to one rank, over every communicator it uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CommCounters {
    #[serde(rename = "allgather")]
    pub all_gather: KindCounters,
    #[serde(rename = "reducescatter")]
    pub reduce_scatter: KindCounters,
    #[serde(rename = "allreduce")]
    pub all_reduce: KindCounters,
}

impl CommCounters {
    pub fn get(&self, kind: CollectiveKind) -> &KindCounters {
        match kind {
            CollectiveKind::AllGather => &self.all_gather,
            CollectiveKind::ReduceScatter => &self.reduce_scatter,
            CollectiveKind::AllReduce => &self.all_reduce,
        }
    }

    fn get_mut(&mut self, kind: CollectiveKind) -> &mut KindCounters {
        match kind {
            CollectiveKind::AllGather => &mut self.all_gather,
            CollectiveKind::ReduceScatter => &mut self.reduce_scatter,
            CollectiveKind::AllReduce => &mut self.all_reduce,
        }
    }

    pub(crate) fn record(&mut self, kind: CollectiveKind, n: u64, p: usize) {
        let (words, messages) = collective_cost(kind, n, p);
        let c = self.get_mut(kind);
        c.calls += 1;
        c.words += words;
        c.messages += messages;
    }

    pub fn words(&self) -> Words {
        CollectiveKind::ALL.iter().fold(Words::zero(), |acc, &k| acc + self.get(k).words)
    }

    pub fn messages(&self) -> u64 {
        CollectiveKind::ALL.iter().map(|&k| self.get(k).messages).sum()
    }

    pub fn calls(&self) -> u64 {
        CollectiveKind::ALL.iter().map(|&k| self.get(k).calls).sum()
    }
}

impl Sub for CommCounters {
    type Output = CommCounters;

    fn sub(self, rhs: CommCounters) -> CommCounters {
        CommCounters {
            all_gather: self.all_gather - rhs.all_gather,
            reduce_scatter: self.reduce_scatter - rhs.reduce_scatter,
            all_reduce: self.all_reduce - rhs.all_reduce,
        }
    }
}

impl AddAssign for CommCounters {
    fn add_assign(&mut self, rhs: CommCounters) {
        self.all_gather += rhs.all_gather;
        self.reduce_scatter += rhs.reduce_scatter;
        self.all_reduce += rhs.all_reduce;
    }
}
