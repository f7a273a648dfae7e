//! Run configuration: one JSON schema shared by every subcommand, with a
//! section of options per command. Unknown keys are rejected everywhere.

use std::path::PathBuf;

use dirichlet_nls::basis::{DomainSpec, EigenBasis, SpectralField};
use dirichlet_nls::driver::{band_data_with_energy, ContinuationConfig};
use dirichlet_nls::estimates::EstimateId;
use dirichlet_nls::rng::{random_field, stream};
use dirichlet_nls::virial::gaussian_packet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_domain")]
    pub domain: DomainSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateOptions,
    #[serde(default)]
    pub lp_check: LpCheckOptions,
    #[serde(default = "ScanOptions::bilinear")]
    pub bilinear_scan: ScanOptions,
    #[serde(default = "ScanOptions::l4")]
    pub l4_scan: ScanOptions,
    #[serde(default)]
    pub trace_check: TraceOptions,
    #[serde(default)]
    pub virial_check: VirialOptions,
    #[serde(default)]
    pub logsobolev_check: LogSobolevOptions,
    #[serde(default)]
    pub global_run: GlobalRunOptions,
}

fn default_domain() -> DomainSpec {
    DomainSpec::cube(16)
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every section has defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn basis(&self) -> Result<Arc<EigenBasis>, CliError> {
        Ok(EigenBasis::new(self.domain)?)
    }
}

/// Initial data for time-dependent commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// A single eigenmode times `amplitude`.
    Mode {
        index: [usize; 3],
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Random band-`j` data scaled to the given energy.
    Band { j: u32, energy: f64 },
    /// Random coefficients on every mode, L²-normalized then scaled.
    Random {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// A Gaussian wave packet on the cube.
    Packet {
        centre: [f64; 3],
        sigma: f64,
        momentum: [f64; 3],
    },
}

fn one() -> f64 {
    1.0
}

impl InitialData {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, InitialData::Band { .. } | InitialData::Random { .. })
    }

    pub fn build(&self, basis: &Arc<EigenBasis>, epsilon: f64, seed: Option<u64>) -> Result<SpectralField, CliError> {
        let seed = || seed.ok_or_else(|| CliError::Usage("random initial data needs a seed".into()));
        Ok(match *self {
            InitialData::Mode { index, amplitude } => {
                SpectralField::mode(basis, index)?.scaled(Complex64::new(amplitude, 0.0))
            }
            InitialData::Band { j, energy } => band_data_with_energy(basis, j, energy, epsilon, seed()?)?,
            InitialData::Random { amplitude } => {
                random_field(basis, &mut stream(seed()?, &[0x494E]), |_| true).scaled(Complex64::new(amplitude, 0.0))
            }
            InitialData::Packet { centre, sigma, momentum } => gaussian_packet(basis, centre, sigma, momentum)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateOptions {
    pub initial: InitialData,
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Sobolev index recorded in the trajectory ledger.
    pub s: f64,
    pub dealias: bool,
    pub snapshot_every: usize,
    /// Largest admissible relative mass drift.
    pub mass_tolerance: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            initial: InitialData::Mode {
                index: [1, 1, 1],
                amplitude: 1.0,
            },
            epsilon: 0.0,
            dt: 1e-3,
            t_end: 1.0,
            s: 2.0,
            dealias: false,
            snapshot_every: 100,
            mass_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LpCheckOptions {
    pub trials: u32,
    pub tolerance: f64,
}

impl Default for LpCheckOptions {
    fn default() -> Self {
        Self {
            trials: 10,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOptions {
    pub estimates: Vec<EstimateId>,
    pub j_range: [u32; 2],
    #[serde(default = "default_k_range")]
    pub k_range: [u32; 2],
    pub trials: u32,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_nodes")]
    pub simpson_nodes: usize,
    /// Largest admissible log₂ slope of the per-`j` max ratio; `null` disables the check.
    #[serde(default = "default_slope")]
    pub slope_tolerance: Option<f64>,
}

fn default_k_range() -> [u32; 2] {
    [1, u32::MAX]
}
fn default_nodes() -> usize {
    65
}
fn default_slope() -> Option<f64> {
    Some(0.3)
}

impl ScanOptions {
    fn bilinear() -> Self {
        Self {
            estimates: vec![EstimateId::GlobalTime, EstimateId::Semiclassical, EstimateId::GradBilinear],
            j_range: [2, 3],
            k_range: default_k_range(),
            trials: 5,
            horizon: 1.0,
            simpson_nodes: default_nodes(),
            slope_tolerance: default_slope(),
        }
    }

    fn l4() -> Self {
        Self {
            estimates: vec![EstimateId::L4],
            j_range: [2, 3],
            ..Self::bilinear()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceOptions {
    pub bands: Vec<u32>,
    pub trials: u32,
    /// Largest admissible max/min spread of the per-λ constants.
    pub spread_tolerance: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            bands: vec![2, 3, 4],
            trials: 5,
            spread_tolerance: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VirialOptions {
    /// Band pairs `(j, k)`; the weight uses `k`.
    pub pairs: Vec<[u32; 2]>,
    /// Random unit directions added to the three coordinate axes.
    pub extra_directions: usize,
    pub fd_time: f64,
    pub fd_tolerance: f64,
    pub second_times: Vec<f64>,
    pub second_tolerance: f64,
}

impl Default for VirialOptions {
    fn default() -> Self {
        Self {
            pairs: vec![[1, 1], [2, 1], [2, 2]],
            extra_directions: 0,
            fd_time: 0.05,
            fd_tolerance: 1e-3,
            second_times: vec![0.0, 0.1],
            second_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogSobolevOptions {
    pub calibration: usize,
    pub holdout: usize,
    pub margin: f64,
}

impl Default for LogSobolevOptions {
    fn default() -> Self {
        Self {
            calibration: 50,
            holdout: 100,
            margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalRunOptions {
    pub initial: InitialData,
    pub continuation: ContinuationConfig,
    /// Largest admissible relative energy drift (checked when not focusing).
    pub energy_tolerance: f64,
    /// Fewest local intervals the run must take, if set.
    pub min_intervals: Option<usize>,
}

impl Default for GlobalRunOptions {
    fn default() -> Self {
        Self {
            initial: InitialData::Band { j: 2, energy: 1.0 },
            continuation: ContinuationConfig::new(1.0, 1.0),
            energy_tolerance: 1e-6,
            min_intervals: None,
        }
    }
}
