//! Command-line front end: every study behind one binary, with a manifest
//! per run.
//!
//! Exit status: 0 on success, 1 when `verify` finds failing criteria, 2 on
//! invalid input or configuration, 3 when a solver or flow fails.

mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};
use manifest::Run;

pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Exit status for a failed run.
fn exit_code(err: &anyhow::Error) -> u8 {
    use drops2d::Error as E;
    if let Some(e) = err.downcast_ref::<CliError>() {
        return match e {
            CliError::Validation(_) | CliError::Io(_) => EXIT_VALIDATION,
        };
    }
    match err.downcast_ref::<E>() {
        Some(
            E::SolverFailure { .. }
            | E::StalledFlow { .. }
            | E::Assembly(_)
            | E::Consistency(_)
            | E::UnreliableTrace { .. },
        ) => EXIT_SOLVER,
        Some(_) => EXIT_VALIDATION,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_VALIDATION,
        None => EXIT_SOLVER,
    }
}

/// Caps the worker pool at DROPS2D_THREADS when set.
fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DROPS2D_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("DROPS2D_THREADS must be a positive integer, got '{v}'")))?;
    let available = std::thread::available_parallelism().map_or(n, |p| p.get());
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.min(available.max(1)))
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn fail(err: &anyhow::Error) -> ExitCode {
    eprintln!("drops2d: error: {err:#}");
    ExitCode::from(exit_code(err))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let prepared = init_threads()
        .and_then(|_| RunConfig::from_cli(cli))
        .and_then(|cfg| cfg.validate().map(|_| cfg))
        .and_then(Run::start);
    let mut run = match prepared {
        Ok(run) => run,
        Err(e) => return fail(&e.into()),
    };
    match commands::dispatch(&mut run) {
        Ok(code) => match run.finish(None) {
            Ok(()) => ExitCode::from(code),
            Err(e) => fail(&e.into()),
        },
        Err(err) => {
            let code = exit_code(&err);
            if let Err(e) = run.finish(Some((&format!("{err:#}"), code))) {
                eprintln!("drops2d: could not write the manifest: {e}");
            }
            eprintln!("drops2d: error: {err:#}");
            ExitCode::from(code)
        }
    }
}
