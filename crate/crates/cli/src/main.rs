//! `boxjenkins`: identification, estimation, diagnostics and forecasting of
//! ARIMA models on ensemble percentile series.
//!
//! Exit codes: 0 success, 2 bad input or arguments, 3 a fit did not
//! converge, 4 internal or output failure.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "boxjenkins", version, about = "Box-Jenkins ARIMA pipeline for percentile ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Correlogram, Ljung-Box table and stationarity check
    Identify,
    /// Estimate the model, write the coefficient table, residuals and diagnostics
    Fit,
    /// Residual white-noise checks for the fitted model
    Diagnose,
    /// Point forecasts with confidence limits
    Forecast,
    /// Fit all three percentiles and summarize the six AR/MA estimates
    Scenario,
    /// Generate a seeded ARMA series
    Simulate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.flags).and_then(|cfg| match cli.command {
        Command::Identify => commands::identify(&cfg),
        Command::Fit => commands::fit_cmd(&cfg),
        Command::Diagnose => commands::diagnose_cmd(&cfg),
        Command::Forecast => commands::forecast_cmd(&cfg),
        Command::Scenario => commands::scenario_cmd(&cfg),
        Command::Simulate => commands::simulate_cmd(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
