mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdforecast::pipeline::CellFailure;
use serde::Serialize;

use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "hdforecast", version, about = "High-dimensional direct forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Newey-West lags for t-ratios (0 = classical).
    #[arg(long, global = true, value_name = "LAGS")]
    hac: Option<usize>,
    /// Exponent of K in the test critical value.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Principal components used to filter test-based selection (0 disables).
    #[arg(long, global = true)]
    pcs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply the transform recipe and write the transformed panel.
    Transform,
    /// Recursive forecasting: forecasts.csv, selection_log.json, eval_report.csv.
    Forecast,
    /// Monte Carlo selection experiment: mc_report.csv.
    Simulate,
    /// Re-score a forecasts CSV against a realizations CSV.
    Evaluate {
        #[arg(long)]
        forecasts: Option<PathBuf>,
        #[arg(long)]
        realizations: Option<PathBuf>,
    },
}

/// Machine-readable failure, printed to stderr as JSON.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed_cells: Vec<CellFailure>,
}

impl Failure {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            failed_cells: Vec::new(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("io", format!("{}: {e}", path.display()))
    }
}

impl From<hdforecast::Error> for Failure {
    fn from(e: hdforecast::Error) -> Self {
        use hdforecast::Error as E;
        let kind = match &e {
            E::Parse { .. } => "parse",
            E::Io(_) => "io",
            E::Csv(_) | E::Json(_) => "format",
            E::Parameter(_) => "parameter",
            E::InsufficientData(_) | E::EmptyEvaluation(_) | E::EmptySeries(_) => "data",
            _ => "numeric",
        };
        Self::new(kind, e.to_string())
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'a str,
    command: &'a str,
    #[serde(flatten)]
    failure: &'a Failure,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Transform => "transform",
        Command::Forecast => "forecast",
        Command::Simulate => "simulate",
        Command::Evaluate { .. } => "evaluate",
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let status = if failure.failed_cells.is_empty() { "error" } else { "partial" };
            let summary = Summary {
                status,
                command: name,
                failure: &failure,
            };
            eprintln!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::from(if failure.failed_cells.is_empty() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure::new("config", e.to_string()))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        out: cli.out,
        seed: cli.seed,
        hac: cli.hac,
        delta: cli.delta,
        pcs: cli.pcs,
    });
    if let Command::Evaluate { forecasts, realizations } = &cli.command {
        if forecasts.is_some() {
            cfg.evaluate.forecasts = forecasts.clone();
        }
        if realizations.is_some() {
            cfg.evaluate.realizations = realizations.clone();
        }
    }
    cfg.validate()?;
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| Failure::io(&out, e))?;
    match cli.command {
        Command::Transform => commands::transform(&cfg),
        Command::Forecast => commands::forecast(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Evaluate { .. } => commands::evaluate(&cfg),
    }
}
