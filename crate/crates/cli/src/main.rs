mod args;
mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use crate::args::{Cli, Command, ReportArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gpa_core::Error),
    #[error("I/O error on {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("cannot write report: {0}")]
    Report(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use gpa_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(..) | CliError::Report(_) => 3,
            CliError::Core(E::Io { .. } | E::Format { .. }) => 3,
            CliError::Core(E::NumericRange(_)) => 4,
            CliError::Core(_) => 2,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GPA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GPA_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (report, out): (report::Report, &ReportArgs) = match &cli.command {
        Command::Filter(a) => (commands::filter(a)?, &a.report),
        Command::Reference(a) => (commands::reference(a)?, &a.report),
        Command::Order(a) => (commands::order(a)?, &a.report),
        Command::Compare(a) => (commands::compare(a)?, &a.report),
        Command::KernelError(a) => (commands::kernel_error(a)?, &a.report),
        Command::Bench(a) => (commands::bench(a)?, &a.report),
    };
    report.emit(out.report.as_deref(), out.report_format)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpa: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("Try 'gpa --help' for usage.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
