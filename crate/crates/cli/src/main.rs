//! `tracekit` experiment driver.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.

mod config;
mod report;
mod run;

use std::process::ExitCode;

use clap::Parser;
use tracekit::Error;

use config::{validate, warnings, Command, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "tracekit", version, about = "Seeded trace-estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const VALIDATION: u8 = 2;
const RUNTIME: u8 = 3;

/// Core errors that describe bad input rather than a failed run.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::InvalidParameter { .. }
            | Error::MatrixSpec(_)
            | Error::EstimatorSpec(_)
            | Error::InfeasibleConfiguration(_)
            | Error::DimensionMismatch { .. }
            | Error::NotSymmetric { .. }
            | Error::NotOrthonormal { .. },
        ) => VALIDATION,
        _ => RUNTIME,
    }
}

fn main() -> ExitCode {
    let (kind, flags) = Cli::parse().command.split();
    let cfg = match ExperimentConfig::resolve(kind, flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(VALIDATION);
        }
    };
    let violations = validate(&cfg);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid configuration: {v}");
        }
        return ExitCode::from(VALIDATION);
    }
    for w in warnings(&cfg) {
        eprintln!("warning: {w}");
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} workers: {e}", cfg.workers);
            return ExitCode::from(RUNTIME);
        }
    };
    match pool.install(|| run::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
