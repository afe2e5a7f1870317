use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faun_core::dist::ProcessorGrid;
use faun_core::io::FileFormat;
use faun_core::Algorithm;

use crate::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "faun", version, about = "Distributed nonnegative matrix factorization driver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Factorize one matrix.
    Run(RunArgs),
    /// Print modeled per-iteration costs.
    Cost(CostArgs),
    /// Repeat a run over a range of ranks, ranks k or grids.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Impl {
    Seq,
    Naive,
    Faun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FactorFormat {
    Mtx,
    Csv,
}

impl From<FactorFormat> for FileFormat {
    fn from(f: FactorFormat) -> Self {
        match f {
            FactorFormat::Mtx => FileFormat::MatrixMarket,
            FactorFormat::Csv => FileFormat::Csv,
        }
    }
}

/// Problem and solver flags shared by `run` and `sweep`.
#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    #[arg(long, default_value = "bpp", value_parser = parse_algo)]
    pub algo: Algorithm,

    #[arg(long = "impl", value_enum, default_value = "faun")]
    pub implementation: Impl,

    #[arg(short = 'k', long = "rank", default_value_t = 10)]
    pub k: usize,

    #[arg(long, default_value_t = 20)]
    pub iters: usize,

    #[arg(long, default_value_t = 1)]
    pub ranks: usize,

    /// PRxPC; chosen automatically when omitted.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<ProcessorGrid>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Stop when an iteration improves the error by less than this.
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Matrix Market (.mtx) or CSV file.
    #[arg(long, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,

    /// `dense-lowrank M N R` or `sparse-uniform M N DENSITY`.
    #[arg(long, num_args = 4, value_names = ["KIND", "M", "N", "R|DENSITY"])]
    pub synthetic: Option<Vec<String>>,

    /// Seed of the synthetic generator.
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,

    /// Refuse runs whose estimated footprint exceeds this many GiB.
    #[arg(long, default_value_t = 16.0)]
    pub mem_limit_gb: f64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    /// Directory for the W and H factor files.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "mtx")]
    pub format: FactorFormat,

    /// Per-iteration error trace, `iter,rel_error`.
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// JSON report with the time breakdown and counters.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CostArgs {
    #[arg(short = 'm')]
    pub m: Option<usize>,
    #[arg(short = 'n')]
    pub n: Option<usize>,
    #[arg(short = 'k')]
    pub k: Option<usize>,
    #[arg(short = 'p')]
    pub p: Option<usize>,

    #[arg(long, default_value = "mu", value_parser = parse_algo)]
    pub algo: Algorithm,

    /// Seconds per message.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Seconds per word.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Seconds per flop.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Evaluate m, n in {256, 1024, 4096}, p in {4, 16, 64}, k = 16
    /// instead of a single configuration.
    #[arg(long, conflicts_with_all = ["m", "n", "k", "p"])]
    pub builtin_sweep: bool,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Ranks,
    K,
    Grid,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,

    /// Comma-separated axis values. Grid sweeps default to every divisor
    /// pair of --ranks.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,

    #[command(flatten)]
    pub problem: ProblemArgs,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,

    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: faun_core::NmfError| e.to_string())
}

fn parse_grid(s: &str) -> Result<ProcessorGrid, String> {
    s.parse().map_err(|e: faun_core::NmfError| e.to_string())
}

/// Where the input matrix comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File(PathBuf),
    DenseLowRank { m: usize, n: usize, r: usize },
    SparseUniform { m: usize, n: usize, density: f64 },
}

impl ProblemArgs {
    pub fn source(&self) -> CliResult<Source> {
        if let Some(path) = &self.input {
            return Ok(Source::File(path.clone()));
        }
        let Some(spec) = &self.synthetic else {
            return Err(CliError::Usage("one of --input or --synthetic is required".into()));
        };
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("`{s}` is not a matrix dimension")))
        };
        let (m, n) = (dim(&spec[1])?, dim(&spec[2])?);
        match spec[0].as_str() {
            "dense-lowrank" => Ok(Source::DenseLowRank { m, n, r: dim(&spec[3])? }),
            "sparse-uniform" => {
                let density = spec[3]
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("`{}` is not a density", spec[3])))?;
                Ok(Source::SparseUniform { m, n, density })
            }
            other => Err(CliError::Usage(format!(
                "unknown synthetic kind `{other}` (expected dense-lowrank or sparse-uniform)"
            ))),
        }
    }
}
