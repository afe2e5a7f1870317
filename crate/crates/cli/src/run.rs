use std::fs;
use std::path::Path;

use faun_core::comm::CommCounters;
use faun_core::cost::{per_iter_cost, Scheme};
use faun_core::dist::{make_grid, run_faun, run_naive, ProcessorGrid};
use faun_core::io::{gen_dense_lowrank, gen_sparse_uniform, read_matrix, write_factors};
use faun_core::{aunmf_run, DataMatrix, DenseMatrix, IterationTrace, NmfConfig};

use crate::args::{Impl, ProblemArgs, RunArgs, Source};
use crate::report::RunReport;
use crate::{CliError, CliResult};

/// Result of one factorization, whichever implementation ran it.
pub struct Outcome {
    pub report: RunReport,
    pub trace: IterationTrace,
    pub w: DenseMatrix,
    pub h: DenseMatrix,
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let out = execute(&args.problem)?;
    if let Some(path) = &args.trace {
        write_text(path, &out.trace.to_csv())?;
    }
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&out.report).expect("report serializes");
        write_text(path, &(json + "\n"))?;
    }
    if let Some(dir) = &args.output {
        let [wp, hp] = write_factors(&out.w, &out.h, dir, args.format.into())?;
        eprintln!("wrote {} and {}", wp.display(), hp.display());
    }
    let r = &out.report;
    println!(
        "{} {} k={} p={}{}: {} iterations, relative error {}",
        r.implementation,
        r.algo,
        r.k,
        r.ranks,
        r.grid.map(|g| format!(" grid={g}")).unwrap_or_default(),
        r.iterations,
        r.final_rel_error.map_or("n/a".to_string(), |e| format!("{e:.6e}")),
    );
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("FAUN_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("FAUN_THREADS=`{v}` is not a positive integer"))),
    }
}

/// Grid the run will use; `None` for the sequential driver.
fn resolve_grid(p: &ProblemArgs, m: usize, n: usize) -> CliResult<Option<ProcessorGrid>> {
    if p.ranks == 0 {
        return Err(CliError::Usage("--ranks must be at least 1".into()));
    }
    if let Some(cap) = thread_cap()? {
        if p.ranks > cap {
            return Err(CliError::Usage(format!("--ranks {} exceeds FAUN_THREADS={cap}", p.ranks)));
        }
    }
    if let Some(g) = p.grid {
        if g.p() != p.ranks {
            return Err(CliError::Usage(format!("grid {g} has {} ranks but --ranks is {}", g.p(), p.ranks)));
        }
    }
    match p.implementation {
        Impl::Seq => {
            if p.ranks != 1 || p.grid.is_some_and(|g| g.p() != 1) {
                return Err(CliError::Usage("--impl seq runs on a single rank".into()));
            }
            Ok(None)
        }
        Impl::Naive => match p.grid {
            Some(g) if g.pc != 1 => Err(CliError::Usage(format!("--impl naive needs a {}x1 grid, got {g}", p.ranks))),
            _ => Ok(Some(ProcessorGrid::new(p.ranks, 1)?)),
        },
        Impl::Faun => Ok(Some(match p.grid {
            Some(g) => g,
            None => make_grid(m, n, p.ranks)?,
        })),
    }
}

/// Estimated bytes held by all ranks together, from the cost model's
/// per-rank memory with the dense `A` term swapped for `a_words` when the
/// input is sparse.
fn estimate_bytes(p: &ProblemArgs, m: usize, n: usize, grid: Option<ProcessorGrid>, sparse_words: Option<f64>) -> CliResult<f64> {
    let (scheme, ranks, grid) = match (p.implementation, grid) {
        (Impl::Naive, Some(g)) => (Scheme::Naive, p.ranks, g),
        (Impl::Faun, Some(g)) => (Scheme::Faun, p.ranks, g),
        _ => (Scheme::Faun, 1, ProcessorGrid::new(1, 1)?),
    };
    let k = p.k.min(m).min(n).max(1);
    let report = per_iter_cost(scheme, m, n, k, ranks, grid, p.algo)?;
    let mut words = report.memory_words * ranks as f64;
    if let Some(sw) = sparse_words {
        let copies = if scheme == Scheme::Naive { 2.0 } else { 1.0 };
        words += copies * (sw - m as f64 * n as f64);
    }
    Ok(words * 8.0)
}

fn check_memory(p: &ProblemArgs, m: usize, n: usize, grid: Option<ProcessorGrid>, sparse_words: Option<f64>) -> CliResult<()> {
    let bytes = estimate_bytes(p, m, n, grid, sparse_words)?;
    let limit = p.mem_limit_gb * (1u64 << 30) as f64;
    if bytes > limit {
        return Err(CliError::Runtime(format!(
            "refusing a {m}x{n} run: estimated {:.2} GiB exceeds --mem-limit-gb {}",
            bytes / (1u64 << 30) as f64,
            p.mem_limit_gb
        )));
    }
    Ok(())
}

fn load(p: &ProblemArgs) -> CliResult<(DataMatrix, Option<ProcessorGrid>)> {
    let source = p.source()?;
    let a = match source {
        Source::File(path) => {
            let loaded = read_matrix(&path)?;
            if loaded.has_negative {
                return Err(CliError::Runtime(format!("{}: matrix has negative entries", path.display())));
            }
            loaded.matrix
        }
        Source::DenseLowRank { m, n, r } => {
            let grid = resolve_grid(p, m, n)?;
            check_memory(p, m, n, grid, None)?;
            DataMatrix::Dense(gen_dense_lowrank(m, n, r, p.data_seed)?)
        }
        Source::SparseUniform { m, n, density } => {
            let grid = resolve_grid(p, m, n)?;
            check_memory(p, m, n, grid, Some(2.0 * density * m as f64 * n as f64))?;
            DataMatrix::Sparse(gen_sparse_uniform(m, n, density, p.data_seed)?)
        }
    };
    let (m, n) = (a.rows(), a.cols());
    let grid = resolve_grid(p, m, n)?;
    let sparse_words = a.is_sparse().then(|| 2.0 * a.nnz() as f64);
    check_memory(p, m, n, grid, sparse_words)?;
    Ok((a, grid))
}

pub fn execute(p: &ProblemArgs) -> CliResult<Outcome> {
    let (a, grid) = load(p)?;
    let mut config = NmfConfig::new(p.k, p.iters, p.algo, p.seed);
    if let Some(t) = p.tolerance {
        config = config.with_tolerance(t);
    }
    let (m, n) = (a.rows(), a.cols());
    let (trace, w, h, counters, flops) = match (p.implementation, grid) {
        (Impl::Seq, _) | (_, None) => {
            let run = match &a {
                DataMatrix::Dense(d) => aunmf_run(d, &config)?,
                DataMatrix::Sparse(s) => aunmf_run(s, &config)?,
            };
            let h = run.h();
            (run.trace, run.w, h, CommCounters::default(), run.work.total())
        }
        (Impl::Naive, Some(_)) | (Impl::Faun, Some(_)) => {
            let run = match p.implementation {
                Impl::Naive => run_naive(&a, p.ranks, &config)?,
                _ => run_faun(&a, grid.expect("grid resolved"), &config)?,
            };
            let busiest = run
                .rank_counters
                .iter()
                .copied()
                .max_by_key(|c| c.words())
                .unwrap_or_default();
            let flops = run.work.iter().map(|w| w.total()).max().unwrap_or(0);
            let h = run.h();
            (run.trace, run.w, h, busiest, flops)
        }
    };
    let report = RunReport::new(p, m, n, grid, &trace, &counters, flops);
    Ok(Outcome { report, trace, w, h })
}
