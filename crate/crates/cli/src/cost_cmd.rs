use serde::Serialize;

use faun_core::cost::{bandwidth_lower_bound, optimize_grid_exhaustive, per_iter_cost, CostReport, MachineParams, Scheme};
use faun_core::dist::{make_grid, ProcessorGrid};
use faun_core::Algorithm;

use crate::args::{CostArgs, TableFormat};
use crate::{CliError, CliResult};

#[derive(Serialize)]
struct ConfigCost {
    m: usize,
    n: usize,
    k: usize,
    p: usize,
    algo: String,
    optimal_grid: String,
    heuristic_grid: String,
    lower_bound: Option<f64>,
    /// Faun words over the lower bound.
    ratio: Option<f64>,
    machine: MachineParams,
    reports: Vec<SchemeCost>,
}

#[derive(Serialize)]
struct SchemeCost {
    modeled_seconds: f64,
    #[serde(flatten)]
    report: CostReport,
}

const BUILTIN_DIMS: [usize; 3] = [256, 1024, 4096];
const BUILTIN_RANKS: [usize; 3] = [4, 16, 64];

fn evaluate(m: usize, n: usize, k: usize, p: usize, algo: Algorithm, machine: MachineParams) -> CliResult<ConfigCost> {
    if p == 0 {
        return Err(CliError::Usage("-p must be at least 1".into()));
    }
    let optimal = optimize_grid_exhaustive(m, n, k, p)?;
    let heuristic = make_grid(m, n, p)?;
    let mut reports = Vec::new();
    for (scheme, grid) in [(Scheme::Naive, ProcessorGrid::new(p, 1)?), (Scheme::Faun, optimal)] {
        let report = per_iter_cost(scheme, m, n, k, p, grid, algo)?;
        reports.push(SchemeCost {
            modeled_seconds: report.modeled_seconds(&machine),
            report,
        });
    }
    let lower_bound = bandwidth_lower_bound(m, n, k, p);
    let ratio = lower_bound.filter(|&lb| lb > 0.0).map(|lb| reports[1].report.words_f64() / lb);
    Ok(ConfigCost {
        m,
        n,
        k,
        p,
        algo: algo.to_string(),
        optimal_grid: optimal.to_string(),
        heuristic_grid: heuristic.to_string(),
        lower_bound,
        ratio,
        machine,
        reports,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_cost(a: &CostArgs) -> CliResult<()> {
    let d = MachineParams::default();
    let machine = MachineParams {
        alpha: a.alpha.unwrap_or(d.alpha),
        beta: a.beta.unwrap_or(d.beta),
        gamma: a.gamma.unwrap_or(d.gamma),
    };
    let mut configs = Vec::new();
    if a.builtin_sweep {
        for m in BUILTIN_DIMS {
            for n in BUILTIN_DIMS {
                for p in BUILTIN_RANKS {
                    configs.push(evaluate(m, n, 16, p, a.algo, machine)?);
                }
            }
        }
    } else {
        let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| CliError::Usage(format!("{flag} is required")));
        configs.push(evaluate(need(a.m, "-m")?, need(a.n, "-n")?, need(a.k, "-k")?, need(a.p, "-p")?, a.algo, machine)?);
    }
    match a.format {
        TableFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&configs).expect("cost report serializes"));
        }
        TableFormat::Csv => {
            println!("scheme,algo,m,n,k,p,grid,optimal_grid,flops,words,messages,memory_words,luc_model,modeled_seconds,lower_bound,ratio");
            for c in &configs {
                for s in &c.reports {
                    let r = &s.report;
                    let ratio = c.lower_bound.filter(|&lb| lb > 0.0).map(|lb| r.words_f64() / lb);
                    println!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.scheme,
                        c.algo,
                        c.m,
                        c.n,
                        c.k,
                        c.p,
                        r.grid,
                        c.optimal_grid,
                        r.flops,
                        r.words_f64(),
                        r.messages,
                        r.memory_words,
                        serde_json::to_value(r.luc_model).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                        s.modeled_seconds,
                        opt(c.lower_bound),
                        opt(ratio),
                    );
                }
            }
        }
    }
    Ok(())
}
