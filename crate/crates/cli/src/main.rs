mod args;
mod commands;
mod output;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use majorana_core::bethe::BetheError;
use majorana_core::spectral::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("classification failed: {0}")]
    Classification(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("I/O error: {0}")]
    Io(std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Internal(_) => 1,
            CliError::Classification(_) | CliError::Computation(_) => 2,
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Computation(e.to_string())
    }
}

impl From<BetheError> for CliError {
    fn from(e: BetheError) -> Self {
        match e {
            BetheError::Model(_) | BetheError::DegenerateUniformChain | BetheError::OutOfDomain(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Computation(other.to_string()),
        }
    }
}

const VERIFY_FAILED: u8 = 3;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: args::Cli) -> Result<ExitCode, CliError> {
    let threads = args::threads_from_env(std::env::var("MAJORANA_PT_THREADS").ok())?;
    let cfg = args::resolve(cli.command, cli.opts, threads)?;
    let artifact = commands::run(&cfg)?;
    output::emit(cfg.out.as_deref(), &artifact.body)?;
    if artifact.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        if cfg.out.is_some() {
            eprintln!("verification failed");
        }
        Ok(ExitCode::from(VERIFY_FAILED))
    }
}
