//! Batch driver for the carry-gap pipeline.
//!
//! Stages are composable through files in the output directory:
//! `simulate` (or external data) -> `ingest` -> `estimate` -> `panel` ->
//! `regress` -> `loyo` / `scan` / `buckets` / `report`, plus the standalone
//! `hurdle` calculator and the `mc-verify` closed-form check.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 validation
//! failure.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use carrygap::econometrics::RegressionError;
use carrygap::market_data::MarketDataError;
use carrygap::synthetic_lab::SimError;
use carrygap::validation::ValidationError;
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Missing or malformed data (exit 2).
    Data(String),
    /// A verification check failed (exit 3).
    Validation(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Validation(m) => write!(f, "validation failure: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl From<MarketDataError> for CliError {
    fn from(e: MarketDataError) -> Self {
        match e {
            MarketDataError::InvalidFilterConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<RegressionError> for CliError {
    fn from(e: RegressionError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "carrygap",
    version,
    about = "Option-implied discount factors, carry-gap panels, and GBM path-risk regressions"
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and CARRYGAP_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic market (quotes, daily, OIS, truth ledger).
    Simulate,
    /// Load quotes, apply filters, and pair calls with puts.
    Ingest,
    /// Recover implied discount factors and forwards per cell.
    Estimate,
    /// Join cells with the OIS curve into the carry-gap panel.
    Panel,
    /// Fit the baseline and drift-extended specifications with HAC inference.
    Regress,
    /// Leave-one-year-out validation of both specifications.
    Loyo,
    /// Scan the drift-proxy lookback over the configured grid.
    Scan,
    /// Within-bucket fit diagnostics of the full-sample fits.
    Buckets,
    /// Convert a fitted carry gap into a price-space hurdle.
    Hurdle {
        /// Forward level in index points.
        #[arg(long)]
        forward: f64,
        /// Time to maturity in years.
        #[arg(long)]
        tau: f64,
        /// Fitted carry gap in basis points per year.
        #[arg(long)]
        cg_bp: f64,
    },
    /// Check the Monte Carlo estimator against the closed forms.
    McVerify {
        /// Simulation paths per case (antithetic pairs).
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
    },
    /// Assemble summary tables and figures from stage artifacts.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.out.as_deref(), cli.seed)?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Ingest => commands::cmd_ingest(&cfg),
        Command::Estimate => commands::cmd_estimate(&cfg),
        Command::Panel => commands::cmd_panel(&cfg),
        Command::Regress => commands::cmd_regress(&cfg),
        Command::Loyo => commands::cmd_loyo(&cfg),
        Command::Scan => commands::cmd_scan(&cfg),
        Command::Buckets => commands::cmd_buckets(&cfg),
        Command::Hurdle {
            forward,
            tau,
            cg_bp,
        } => commands::cmd_hurdle(&cfg, forward, tau, cg_bp),
        Command::McVerify { paths } => commands::cmd_mc_verify(&cfg, paths),
        Command::Report => commands::cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carrygap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
