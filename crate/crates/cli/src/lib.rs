//! Command-line front end: configuration, dispatch to the solver and estimate
//! harness, and deterministic result persistence with a run manifest.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use config::RunConfig;
pub use manifest::Manifest;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "DNLS_OUTPUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dirichlet_nls::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for usage and configuration errors, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dnls", version, about = "Spectral NLS solver and dyadic estimate harness on Dirichlet domains")]
pub struct Cli {
    /// JSON run configuration; missing sections take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the configuration and the environment.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evolve initial data and record the conservation ledger and snapshots.
    Simulate,
    /// Littlewood-Paley reconstruction and transform roundtrip residuals.
    LpCheck,
    /// Dyadic bilinear estimate sweep.
    BilinearScan,
    /// Virial identity checks by finite differences.
    VirialCheck,
    /// Trace-lemma constant sweep.
    TraceCheck,
    /// Dyadic L⁴ (and related single-band) estimate sweep.
    L4Scan,
    /// Log-Sobolev calibration and holdout check.
    LogsobolevCheck,
    /// Iterated local-in-time continuation with growth audit.
    GlobalRun,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::LpCheck => "lp-check",
            Command::BilinearScan => "bilinear-scan",
            Command::VirialCheck => "virial-check",
            Command::TraceCheck => "trace-check",
            Command::L4Scan => "l4-scan",
            Command::LogsobolevCheck => "logsobolev-check",
            Command::GlobalRun => "global-run",
        }
    }

    pub fn is_stochastic(self, cfg: &RunConfig) -> bool {
        match self {
            Command::Simulate => cfg.simulate.initial.is_stochastic(),
            Command::GlobalRun => cfg.global_run.initial.is_stochastic(),
            _ => true,
        }
    }
}

/// One verified property with its measured value and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value >= tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            passed: ok,
        }
    }
}

/// Files (relative path, bytes) and checks produced by a command.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub checks: Vec<Check>,
}

impl CommandOutput {
    pub fn file(&mut self, name: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Apply flag and environment overrides: flags beat the configuration, which
/// beats `DNLS_OUTPUT`, which beats `./dnls-output`.
pub fn effective_config(cli: &Cli, env_output: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    cfg.output = cli
        .out
        .clone()
        .or(cfg.output.take())
        .or(env_output)
        .or_else(|| Some(PathBuf::from("dnls-output")));
    if cfg.workers == Some(0) {
        return Err(CliError::Usage("--workers must be positive".into()));
    }
    Ok(cfg)
}

/// Run `command` under `cfg`, write its outputs and the manifest, and return
/// the manifest.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Manifest, CliError> {
    if command.is_stochastic(cfg) && cfg.seed.is_none() {
        return Err(CliError::Usage(format!("{} is stochastic and needs --seed", command.name())));
    }
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let start = Instant::now();
    let output = pool.install(|| commands::dispatch(command, cfg))?;
    let wall = start.elapsed().as_secs_f64();
    let dir = cfg.output.as_deref().unwrap_or(Path::new("dnls-output"));
    let mut names = Vec::new();
    let mut files = output.files;
    files.sort_by(|a, b| a.0.cmp(&b.0));
    for (name, bytes) in &files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        names.push(name.to_string_lossy().into_owned());
    }
    let manifest = Manifest::new(command, cfg, workers, wall, output.checks, names)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}
