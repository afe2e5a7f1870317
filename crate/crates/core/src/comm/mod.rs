//! In-process SPMD communicator.
//!
//! Each rank runs on its own thread and owns a [`Communicator`] handle.
//! Ranks meet only inside collectives: every call deposits its payload,
//! the last rank to arrive publishes the full set of payloads, and each
//! rank then computes its result from that set. Reductions always add
//! contributions in ascending rank order, so results do not depend on
//! thread scheduling.

mod counters;

pub use counters::{collective_cost, words_f64, CollectiveKind, CommCounters, KindCounters, Words};

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use crate::error::{NmfError, Result};

const POLL: Duration = Duration::from_millis(50);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scope {
    Global,
    GridRow,
    GridColumn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    AllGather,
    ReduceScatter,
    AllReduce,
    Split,
}

type Deposit = (Op, Vec<f64>);

struct Rendezvous {
    slots: Vec<Option<Deposit>>,
    arrived: usize,
    generation: u64,
    published: Option<Arc<Vec<Deposit>>>,
}

/// State shared by the ranks of one communicator.
struct Group {
    size: usize,
    state: Mutex<Rendezvous>,
    cv: Condvar,
    children: Mutex<HashMap<(u64, Scope, usize), Arc<Group>>>,
}

impl Group {
    fn new(size: usize) -> Arc<Self> {
        Arc::new(Self {
            size,
            state: Mutex::new(Rendezvous {
                slots: (0..size).map(|_| None).collect(),
                arrived: 0,
                generation: 0,
                published: None,
            }),
            cv: Condvar::new(),
            children: Mutex::new(HashMap::new()),
        })
    }

    fn child(&self, key: (u64, Scope, usize), size: usize) -> Arc<Group> {
        let mut map = self.children.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key).or_insert_with(|| Group::new(size)).clone()
    }
}

/// One rank's handle on a group of ranks.
#[derive(Clone)]
pub struct Communicator {
    rank: usize,
    scope: Scope,
    group: Arc<Group>,
    counters: Arc<Mutex<CommCounters>>,
    abort: Arc<AtomicBool>,
}

impl std::fmt::Debug for Communicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Communicator")
            .field("rank", &self.rank)
            .field("size", &self.size())
            .field("scope", &self.scope)
            .finish()
    }
}

impl Communicator {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.group.size
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    /// Totals for this rank across every communicator derived from the same
    /// world handle.
    pub fn counters(&self) -> CommCounters {
        *self.counters.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Blocks until every rank has deposited, then returns all deposits in
    /// rank order. Returns the exchange generation alongside.
    fn exchange(&self, op: Op, data: Vec<f64>) -> Result<(u64, Arc<Vec<Deposit>>)> {
        let g = &self.group;
        if g.size == 1 {
            return Ok((0, Arc::new(vec![(op, data)])));
        }
        let mut st = g.state.lock().unwrap_or_else(|e| e.into_inner());
        let gen = st.generation;
        st.slots[self.rank] = Some((op, data));
        st.arrived += 1;
        if st.arrived == g.size {
            let all: Vec<Deposit> = st.slots.iter_mut().map(|s| s.take().expect("every rank deposited")).collect();
            st.published = Some(Arc::new(all));
            st.arrived = 0;
            st.generation += 1;
            g.cv.notify_all();
        } else {
            while st.generation == gen {
                if self.abort.load(Ordering::SeqCst) {
                    return Err(NmfError::Aborted);
                }
                st = g.cv.wait_timeout(st, POLL).unwrap_or_else(|e| e.into_inner()).0;
            }
        }
        Ok((gen, st.published.clone().expect("published before generation bump")))
    }

    /// Exchanges and validates that every rank made the same call with the
    /// same payload length.
    fn collective(&self, op: Op, data: Vec<f64>) -> Result<Arc<Vec<Deposit>>> {
        let len = data.len();
        let (_, all) = self.exchange(op, data)?;
        for (r, (o, d)) in all.iter().enumerate() {
            if *o != op {
                return Err(NmfError::protocol(format!("rank {r} called {o:?} while rank {} called {op:?}", self.rank)));
            }
            if d.len() != all[0].1.len() {
                return Err(NmfError::protocol(format!(
                    "{op:?}: rank 0 sent {} values but rank {r} sent {}",
                    all[0].1.len(),
                    d.len()
                )));
            }
        }
        debug_assert_eq!(all[self.rank].1.len(), len);
        Ok(all)
    }

    fn record(&self, kind: CollectiveKind, n: usize) {
        self.counters.lock().unwrap_or_else(|e| e.into_inner()).record(kind, n as u64, self.size());
    }

    /// Concatenation of every rank's `local`, in rank order.
    pub fn all_gather(&self, local: &[f64]) -> Result<Vec<f64>> {
        let all = self.collective(Op::AllGather, local.to_vec())?;
        self.record(CollectiveKind::AllGather, local.len() * self.size());
        Ok(all.iter().flat_map(|(_, d)| d.iter().copied()).collect())
    }

    /// Chunk `rank` of the elementwise sum; the length must divide evenly.
    pub fn reduce_scatter(&self, local: &[f64]) -> Result<Vec<f64>> {
        let p = self.size();
        if !local.len().is_multiple_of(p) {
            // everyone sees the same lengths, so every rank fails here alike
            let all = self.collective(Op::ReduceScatter, local.to_vec())?;
            return Err(NmfError::protocol(format!(
                "reduce-scatter of {} values over {p} ranks",
                all[0].1.len()
            )));
        }
        let all = self.collective(Op::ReduceScatter, local.to_vec())?;
        let chunk = local.len() / p;
        let range = self.rank * chunk..(self.rank + 1) * chunk;
        self.record(CollectiveKind::ReduceScatter, local.len());
        Ok(sum_in_rank_order(&all, range))
    }

    /// Elementwise sum over all ranks.
    pub fn all_reduce(&self, local: &[f64]) -> Result<Vec<f64>> {
        let out = self.all_reduce_uncounted(local)?;
        self.record(CollectiveKind::AllReduce, local.len());
        Ok(out)
    }

    /// All-reduce that leaves the counters alone; for diagnostics that are
    /// not part of the algorithm, such as error reporting.
    pub fn all_reduce_uncounted(&self, local: &[f64]) -> Result<Vec<f64>> {
        let all = self.collective(Op::AllReduce, local.to_vec())?;
        Ok(sum_in_rank_order(&all, 0..local.len()))
    }

    /// Splits a world laid out as a grid. Returns the communicator over the
    /// ranks sharing `grid_row` (ordered by column index) and the one over
    /// the ranks sharing `grid_col` (ordered by row index).
    pub fn split(&self, grid_row: usize, grid_col: usize) -> Result<(Communicator, Communicator)> {
        let (gen, all) = self.exchange(Op::Split, vec![grid_row as f64, grid_col as f64])?;
        let mut coords = Vec::with_capacity(all.len());
        for (r, (op, d)) in all.iter().enumerate() {
            if *op != Op::Split || d.len() != 2 {
                return Err(NmfError::protocol(format!("rank {r} did not join the split")));
            }
            coords.push((d[0] as usize, d[1] as usize));
        }
        let pr = coords.iter().map(|c| c.0).max().unwrap_or(0) + 1;
        let pc = coords.iter().map(|c| c.1).max().unwrap_or(0) + 1;
        let mut seen = vec![false; pr * pc];
        for &(i, j) in &coords {
            if pr * pc != self.size() || std::mem::replace(&mut seen[i * pc + j], true) {
                return Err(NmfError::protocol(format!(
                    "grid coordinates {coords:?} do not tile a grid of {} ranks",
                    self.size()
                )));
            }
        }
        let row = Communicator {
            rank: grid_col,
            scope: Scope::GridRow,
            group: self.group.child((gen, Scope::GridRow, grid_row), pc),
            counters: self.counters.clone(),
            abort: self.abort.clone(),
        };
        let col = Communicator {
            rank: grid_row,
            scope: Scope::GridColumn,
            group: self.group.child((gen, Scope::GridColumn, grid_col), pr),
            counters: self.counters.clone(),
            abort: self.abort.clone(),
        };
        Ok((row, col))
    }

    /// Tells every peer blocked in a collective to give up.
    pub fn abort(&self) {
        self.abort.store(true, Ordering::SeqCst);
    }
}

fn sum_in_rank_order(all: &[Deposit], range: std::ops::Range<usize>) -> Vec<f64> {
    let mut out = vec![0.0; range.len()];
    for (_, d) in all {
        for (o, v) in out.iter_mut().zip(&d[range.clone()]) {
            *o += v;
        }
    }
    out
}

/// Runs `f` on `p` ranks, one thread each, and collects the per-rank
/// results in rank order. If any rank fails, its peers are released from
/// pending collectives and the first genuine error is returned.
pub fn run_spmd<T, F>(p: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Communicator) -> Result<T> + Sync,
{
    if p == 0 {
        return Err(NmfError::invalid("at least one rank is required"));
    }
    let world = Group::new(p);
    let abort = Arc::new(AtomicBool::new(false));
    let results: Vec<Result<T>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|rank| {
                let comm = Communicator {
                    rank,
                    scope: Scope::Global,
                    group: world.clone(),
                    counters: Arc::new(Mutex::new(CommCounters::default())),
                    abort: abort.clone(),
                };
                let f = &f;
                std::thread::Builder::new()
                    .name(format!("rank-{rank}"))
                    .spawn_scoped(s, move || {
                        let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&comm)));
                        let out = match out {
                            Ok(r) => r,
                            Err(_) => Err(NmfError::protocol(format!("rank {rank} panicked"))),
                        };
                        if out.is_err() {
                            comm.abort();
                        }
                        out
                    })
                    .expect("spawn rank thread")
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rank thread")).collect()
    });
    let mut out = Vec::with_capacity(p);
    let mut aborted = false;
    let mut first = None;
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(NmfError::Aborted) => aborted = true,
            Err(e) => {
                if first.is_none() {
                    first = Some(e);
                }
            }
        }
    }
    match (first, aborted) {
        (Some(e), _) => Err(e),
        (None, true) => Err(NmfError::Aborted),
        (None, false) => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_gather_examples() {
        let out = run_spmd(2, |c| c.all_gather(&[2.0 * c.rank() as f64 + 1.0, 2.0 * c.rank() as f64 + 2.0])).unwrap();
        assert_eq!(out, vec![vec![1.0, 2.0, 3.0, 4.0]; 2]);

        let out = run_spmd(1, |c| Ok((c.all_gather(&[5.0, 6.0])?, c.counters()))).unwrap();
        assert_eq!(out[0].0, vec![5.0, 6.0]);
        assert_eq!(out[0].1.words(), Words::from(0));
        assert_eq!(out[0].1.messages(), 0);

        let out = run_spmd(4, |c| {
            c.all_gather(&[0.0, 1.0])?;
            Ok(c.counters())
        })
        .unwrap();
        assert!(out.iter().all(|k| k.all_gather.words == Words::from(6) && k.all_gather.messages == 2));
    }

    #[test]
    fn reduce_scatter_examples() {
        let out = run_spmd(2, |c| {
            let base = 4.0 * c.rank() as f64;
            c.reduce_scatter(&[base + 1.0, base + 2.0, base + 3.0, base + 4.0])
        })
        .unwrap();
        assert_eq!(out, vec![vec![6.0, 8.0], vec![10.0, 12.0]]);
        let out = run_spmd(1, |c| c.reduce_scatter(&[1.0, 2.0])).unwrap();
        assert_eq!(out[0], vec![1.0, 2.0]);
        let out = run_spmd(4, |c| {
            c.reduce_scatter(&[1.0; 8])?;
            Ok(c.counters().reduce_scatter.words)
        })
        .unwrap();
        assert!(out.iter().all(|w| *w == Words::from(6)));
    }

    #[test]
    fn all_reduce_examples() {
        let out = run_spmd(2, |c| {
            let r = c.rank() as f64;
            c.all_reduce(&[1.0 + 2.0 * r, 2.0 + 2.0 * r])
        })
        .unwrap();
        assert_eq!(out, vec![vec![4.0, 6.0]; 2]);
        let out = run_spmd(4, |c| {
            c.all_reduce(&[1.0; 4])?;
            Ok(c.counters().all_reduce)
        })
        .unwrap();
        assert!(out.iter().all(|k| k.words == Words::from(6) && k.messages == 4));
    }

    #[test]
    fn uncounted_reduce_leaves_counters() {
        let out = run_spmd(3, |c| {
            let v = c.all_reduce_uncounted(&[1.0])?;
            Ok((v, c.counters()))
        })
        .unwrap();
        assert!(out.iter().all(|(v, k)| v == &vec![3.0] && k.calls() == 0));
    }

    #[test]
    fn length_mismatch_is_protocol_error_everywhere() {
        let out = run_spmd(3, |c| {
            let v = vec![1.0; 1 + c.rank() % 2];
            Ok(c.all_gather(&v).map(|_| ()))
        })
        .unwrap();
        assert!(out.iter().all(|r| matches!(r, Err(NmfError::Protocol(_)))));
        let out = run_spmd(2, |c| Ok(c.reduce_scatter(&[1.0; 3]).map(|_| ()))).unwrap();
        assert!(out.iter().all(|r| matches!(r, Err(NmfError::Protocol(_)))));
    }

    #[test]
    fn failing_rank_releases_peers() {
        let err = run_spmd(3, |c| {
            if c.rank() == 1 {
                return Err(NmfError::invalid("boom"));
            }
            c.all_reduce(&[1.0])?;
            Ok(())
        })
        .unwrap_err();
        assert!(matches!(err, NmfError::InvalidArgument(_)));
    }

    #[test]
    fn reduce_scatter_then_gather_equals_all_reduce() {
        let out = run_spmd(4, |c| {
            let local: Vec<f64> = (0..8).map(|i| 0.1 * (i as f64 + 1.0) * (c.rank() as f64 + 0.3)).collect();
            let chunk = c.reduce_scatter(&local)?;
            let gathered = c.all_gather(&chunk)?;
            let reduced = c.all_reduce(&local)?;
            Ok(gathered == reduced)
        })
        .unwrap();
        assert!(out.into_iter().all(|x| x));
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let run = || {
            run_spmd(5, |c| {
                let local: Vec<f64> = (0..5).map(|i| 1.0 / (3.0 + i as f64 + 7.0 * c.rank() as f64)).collect();
                let mut acc = Vec::new();
                for _ in 0..20 {
                    acc = c.all_reduce(&local)?;
                }
                Ok(acc)
            })
            .unwrap()
        };
        let first = run();
        for _ in 0..5 {
            assert_eq!(run(), first);
        }
    }

    #[test]
    fn split_shapes() {
        // 3x2 grid, row-major rank layout
        let out = run_spmd(6, |c| {
            let (i, j) = (c.rank() / 2, c.rank() % 2);
            let (row, col) = c.split(i, j)?;
            let row_members = row.all_gather(&[c.rank() as f64])?;
            let col_members = col.all_gather(&[c.rank() as f64])?;
            Ok((row.size(), col.size(), row.rank(), col.rank(), row_members, col_members))
        })
        .unwrap();
        let r2 = &out[2]; // grid (1, 0)
        assert_eq!((r2.0, r2.1, r2.2, r2.3), (2, 3, 0, 1));
        assert_eq!(r2.4, vec![2.0, 3.0]);
        assert_eq!(r2.5, vec![0.0, 2.0, 4.0]);
        // row communicators partition the ranks
        let mut seen: Vec<usize> = out.iter().step_by(2).flat_map(|o| o.4.iter().map(|&v| v as usize)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn split_one_by_p() {
        let out = run_spmd(4, |c| {
            let (row, col) = c.split(0, c.rank())?;
            Ok((row.size(), row.rank(), col.size(), row.all_reduce(&[c.rank() as f64])?))
        })
        .unwrap();
        for (r, o) in out.iter().enumerate() {
            assert_eq!((o.0, o.1, o.2), (4, r, 1));
            assert_eq!(o.3, vec![6.0]);
        }
    }

    #[test]
    fn inconsistent_grid_rejected() {
        let out = run_spmd(4, |c| Ok(c.split(c.rank() % 2, 0).map(|_| ()))).unwrap();
        assert!(out.iter().all(|r| matches!(r, Err(NmfError::Protocol(_)))));
    }

    #[test]
    fn sub_communicators_share_rank_counters() {
        let out = run_spmd(4, |c| {
            let (row, col) = c.split(c.rank() / 2, c.rank() % 2)?;
            row.all_gather(&[1.0, 2.0])?;
            col.all_reduce(&[1.0])?;
            Ok(c.counters())
        })
        .unwrap();
        for k in out {
            assert_eq!(k.all_gather.words, Words::from(2));
            assert_eq!(k.all_reduce.words, Words::from(1));
            assert_eq!(k.messages(), 3);
        }
    }
}
