//! `qroc`: covariate-adjusted specificity at controlled sensitivity.

mod data;
mod error;
mod fit;
mod output;
mod roc;
mod simulate;
mod svg;
mod thresholds;

use clap::{Parser, Subcommand};

use error::{exit, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qroc", version, about = "Covariate-adjusted specificity and ROC analysis via quantile regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimates, standard errors and intervals at one controlled level.
    Fit(fit::FitArgs),
    /// ROC curves, monotonized curves and an optional confidence band.
    Roc(roc::RocArgs),
    /// Covariate-specific thresholds along one covariate.
    Thresholds(thresholds::ThresholdArgs),
    /// Monte-Carlo study under the built-in simulation design.
    Simulate(simulate::SimulateArgs),
}

/// Sizes the global worker pool from `QROC_THREADS`.
fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("QROC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| error::invalid(format!("QROC_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| error::invalid(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Fit(a) => fit::run(&a),
        Command::Roc(a) => roc::run(&a),
        Command::Thresholds(a) => thresholds::run(&a),
        Command::Simulate(a) => simulate::run(&a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

