//! Run manifest: version, command, configuration hash and echo, wall time and
//! the outcome of every check.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Check, CliError, Command, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_hash: String,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub workers: usize,
    pub wall_time_s: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
}

/// SHA-256 over the serialized configuration; struct field order is fixed, so
/// the digest changes exactly when some field changes.
pub fn config_hash(cfg: &RunConfig) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(
        command: Command,
        cfg: &RunConfig,
        workers: usize,
        wall_time_s: f64,
        checks: Vec<Check>,
        outputs: Vec<String>,
    ) -> Result<Self, CliError> {
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.name().to_string(),
            config_hash: config_hash(cfg)?,
            config: cfg.clone(),
            seed: cfg.seed,
            workers,
            wall_time_s,
            passed: checks.iter().all(|c| c.passed),
            checks,
            outputs,
        })
    }
}
