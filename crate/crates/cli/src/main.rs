//! `faun`: runs, costs and sweeps AU-NMF configurations.

mod args;
mod cost_cmd;
mod report;
mod run;
mod sweep;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status categories.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<faun_core::NmfError> for CliError {
    fn from(e: faun_core::NmfError) -> Self {
        match e {
            faun_core::NmfError::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run::cmd_run(&a),
        Command::Cost(a) => cost_cmd::cmd_cost(&a),
        Command::Sweep(a) => sweep::cmd_sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("faun: usage error: {m}"),
                CliError::Runtime(m) => eprintln!("faun: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
