use faun_core::dist::ProcessorGrid;

use crate::args::{Axis, ProblemArgs, SweepArgs, TableFormat};
use crate::report::RunReport;
use crate::run::{execute, write_text};
use crate::{CliError, CliResult};

fn parse_values<T: std::str::FromStr>(values: &[String], what: &str) -> CliResult<Vec<T>> {
    if values.is_empty() {
        return Err(CliError::Usage(format!("--values is required for a {what} sweep")));
    }
    values
        .iter()
        .map(|v| v.trim().parse().map_err(|_| CliError::Usage(format!("`{v}` is not a valid {what} value"))))
        .collect()
}

/// One problem configuration per axis value.
fn configurations(a: &SweepArgs) -> CliResult<Vec<(String, ProblemArgs)>> {
    let base = &a.problem;
    let with = |f: &dyn Fn(&mut ProblemArgs)| {
        let mut p = base.clone();
        f(&mut p);
        p
    };
    Ok(match a.axis {
        Axis::Ranks => parse_values::<usize>(&a.values, "ranks")?
            .into_iter()
            .map(|r| (r.to_string(), with(&|p| {
                p.ranks = r;
                p.grid = None;
            })))
            .collect(),
        Axis::K => parse_values::<usize>(&a.values, "k")?
            .into_iter()
            .map(|k| (k.to_string(), with(&|p| p.k = k)))
            .collect(),
        Axis::Grid => {
            let grids = if a.values.is_empty() {
                ProcessorGrid::divisor_pairs(base.ranks)
            } else {
                parse_values::<ProcessorGrid>(&a.values, "grid")?
            };
            grids
                .into_iter()
                .map(|g| (g.to_string(), with(&|p| {
                    p.ranks = g.p();
                    p.grid = Some(g);
                })))
                .collect()
        }
    })
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let axis = match a.axis {
        Axis::Ranks => "ranks",
        Axis::K => "k",
        Axis::Grid => "grid",
    };
    let mut rows: Vec<(String, RunReport)> = Vec::new();
    for (value, problem) in configurations(a)? {
        let out = execute(&problem)?;
        eprintln!("{axis}={value}: relative error {:.6e}", out.report.final_rel_error.unwrap_or(f64::NAN));
        rows.push((value, out.report));
    }
    let text = match a.format {
        TableFormat::Csv => {
            let mut s = format!("axis,value,{}\n", RunReport::CSV_HEADER);
            for (value, r) in &rows {
                s.push_str(&format!("{axis},{value},{}\n", r.csv_row()));
            }
            s
        }
        TableFormat::Json => {
            let docs: Vec<_> = rows
                .iter()
                .map(|(value, r)| serde_json::json!({ "axis": axis, "value": value, "report": r }))
                .collect();
            serde_json::to_string_pretty(&docs).expect("sweep serializes") + "\n"
        }
    };
    match &a.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
