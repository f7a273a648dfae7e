//! Well-posedness driver: the log-Sobolev inequality for the log-Besov norm,
//! the local existence time, and the iterated continuation of cubic NLS
//! solutions with a step-by-step norm-growth audit.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{EigenBasis, SpectralField};
use crate::flow::SplitStepper;
use crate::rng::{random_field, stream};
use crate::spectral::{log_besov_norm, sobolev_norm};
use crate::{Error, Result};


const E2: f64 = std::f64::consts::E * std::f64::consts::E;

/// Which logarithms had their argument raised to the floor `e²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clamps {
    pub log: bool,
    pub loglog: bool,
    /// The interval length hit the configured maximum.
    #[serde(default)]
    pub interval: bool,
}

impl fmt::Display for Clamps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.log, "log"), (self.loglog, "loglog"), (self.interval, "cap")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, name)| *name)
            .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

/// `(log x, log log x)` with both arguments floored at `e²`.
pub fn log_factors(x: f64) -> (f64, f64, Clamps) {
    let log = x.max(E2).ln();
    let loglog = log.max(E2).ln();
    let clamps = Clamps {
        log: x < E2,
        loglog: log < E2,
        interval: false,
    };
    (log, loglog, clamps)
}

/// The undetermined constants `C₀ … C₉`; every one defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 1.0,
            c6: 1.0,
            c7: 1.0,
            c8: 1.0,
            c9: 1.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c0, self.c1, self.c2, self.c3, self.c4, self.c5, self.c6, self.c7, self.c8, self.c9,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) && self.c2 > 0.0 && self.c7 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "constants must be finite and non-negative, with c2, c7 > 0".into(),
            ))
        }
    }
}

/// Norms and the optimal cut index behind one log-Sobolev evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSobolevParams {
    pub s: f64,
    pub eta: f64,
    pub j_cut: u32,
    pub l2: f64,
    pub h1: f64,
    pub hs: f64,
    pub b11l: f64,
    pub log: f64,
    pub loglog: f64,
    pub clamps: Clamps,
}

impl LogSobolevParams {
    pub fn of(f: &SpectralField, s: f64) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("log-Sobolev needs s > 1, got {s}")));
        }
        let l2 = f.norm();
        if l2 == 0.0 {
            return Err(Error::Degenerate("log-Sobolev check of the zero field".into()));
        }
        let h1 = sobolev_norm(f, 1.0);
        let hs = sobolev_norm(f, s);
        let eta = s - 1.0;
        let j_cut = (2.0 / eta * (eta * hs / (2.0 * h1)).ln()).round().max(1.0) as u32;
        let (log, loglog, clamps) = log_factors(hs);
        Ok(Self {
            s,
            eta,
            j_cut,
            l2,
            h1,
            hs,
            b11l: log_besov_norm(f),
            log,
            loglog,
            clamps,
        })
    }

    /// `(log‖f‖_{H^s} · log log‖f‖_{H^s})^{1/2}`.
    pub fn growth(&self) -> f64 {
        (self.log * self.loglog).sqrt()
    }

    /// `‖f‖_{B^{1,1}_{2,l}} / ‖f‖_{H¹}`, invariant under scaling.
    pub fn shape(&self) -> f64 {
        self.b11l / self.h1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSobolevCheck {
    pub params: LogSobolevParams,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `‖f‖_{B^{1,1}_{2,l}} ≤ ‖f‖_{H¹}(C₅ + C₆(log‖f‖_{H^s} log log‖f‖_{H^s})^{1/2})`.
pub fn log_sobolev_check(f: &SpectralField, s: f64, c5: f64, c6: f64) -> Result<LogSobolevCheck> {
    let params = LogSobolevParams::of(f, s)?;
    let rhs = params.h1 * (c5 + c6 * params.growth());
    Ok(LogSobolevCheck {
        lhs: params.b11l,
        rhs,
        ratio: params.b11l / rhs,
        params,
    })
}

/// Smallest-on-average line `y ≤ C₅ + C₆x` with `C₅, C₆ ≥ 0` over the points
/// `(growth, shape)`, then inflated by `1 + margin`.
pub fn calibrate_log_sobolev(samples: &[LogSobolevParams], margin: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty calibration set".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|p| (p.growth(), p.shape())).collect();
    let y_max = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let ratio_max = pts.iter().map(|p| p.1 / p.0).fold(0.0, f64::max);
    let mut candidates = vec![(y_max, 0.0), (0.0, ratio_max)];
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            if (b.0 - a.0).abs() > 1e-12 {
                let slope = (b.1 - a.1) / (b.0 - a.0);
                candidates.push((a.1 - slope * a.0, slope));
            }
        }
    }
    let x_sum: f64 = pts.iter().map(|p| p.0).sum();
    let feasible = |&(c5, c6): &(f64, f64)| {
        c5 >= 0.0 && c6 >= 0.0 && pts.iter().all(|&(x, y)| c5 + c6 * x >= y * (1.0 - 1e-12))
    };
    let (c5, c6) = candidates
        .into_iter()
        .filter(feasible)
        .min_by(|a, b| {
            let ca = a.0 * pts.len() as f64 + a.1 * x_sum;
            let cb = b.0 * pts.len() as f64 + b.1 * x_sum;
            ca.total_cmp(&cb)
        })
        .expect("the horizontal line through the highest point is feasible");
    Ok((c5 * (1.0 + margin), c6 * (1.0 + margin)))
}

/// A random field with amplitude `10^{U(0,3)}` and spectral decay
/// `(1+λ)^{−β/2}`, `β ~ U(0.5, 3)`, together with its `s ∈ {1.5, 2, 3}`.
pub fn log_sobolev_sample(basis: &Arc<EigenBasis>, seed: u64, index: u64) -> (SpectralField, f64) {
    const S_VALUES: [f64; 3] = [1.5, 2.0, 3.0];
    let mut rng = stream(seed, &[0x4C53, index]);
    let amplitude = 10f64.powf(rng.random_range(0.0..3.0));
    let beta: f64 = rng.random_range(0.5..3.0);
    let raw = random_field(basis, &mut rng, |_| true);
    let shaped = raw.map_eigen(|lam| Complex64::new((1.0 + lam).powf(-0.5 * beta), 0.0));
    let f = shaped.scaled(Complex64::new(amplitude / shaped.norm(), 0.0));
    (f, S_VALUES[(index % 3) as usize])
}

/// Calibration on one sample set, verification on a disjoint holdout.
#[derive(Debug, Clone, Serialize)]
pub struct LogSobolevStudy {
    pub c5: f64,
    pub c6: f64,
    pub margin: f64,
    pub calibration: Vec<LogSobolevCheck>,
    pub holdout: Vec<LogSobolevCheck>,
    pub max_holdout_ratio: f64,
    /// `log₁₀(max ‖f‖_{H^s} / min ‖f‖_{H^s})` over the holdout set.
    pub hs_decades: f64,
}

impl LogSobolevStudy {
    pub fn passed(&self) -> bool {
        self.max_holdout_ratio <= 1.0
    }
}

pub fn log_sobolev_study(
    basis: &Arc<EigenBasis>,
    seed: u64,
    calibration: usize,
    holdout: usize,
    margin: f64,
) -> Result<LogSobolevStudy> {
    use rayon::prelude::*;
    let draw = |range: std::ops::Range<u64>| -> Result<Vec<LogSobolevParams>> {
        range
            .into_par_iter()
            .map(|i| {
                let (f, s) = log_sobolev_sample(basis, seed, i);
                LogSobolevParams::of(&f, s)
            })
            .collect()
    };
    let cal = draw(0..calibration as u64)?;
    let hold = draw(calibration as u64..(calibration + holdout) as u64)?;
    let (c5, c6) = calibrate_log_sobolev(&cal, margin)?;
    let check = |p: &LogSobolevParams| {
        let rhs = p.h1 * (c5 + c6 * p.growth());
        LogSobolevCheck {
            params: *p,
            lhs: p.b11l,
            rhs,
            ratio: p.b11l / rhs,
        }
    };
    let holdout: Vec<LogSobolevCheck> = hold.iter().map(check).collect();
    let max_holdout_ratio = holdout.iter().map(|c| c.ratio).fold(0.0, f64::max);
    let hs = holdout.iter().map(|c| c.params.hs);
    let (lo, hi) = hs.fold((f64::INFINITY, 0.0f64), |(lo, hi), h| (lo.min(h), hi.max(h)));
    Ok(LogSobolevStudy {
        c5,
        c6,
        margin,
        calibration: cal.iter().map(check).collect(),
        holdout,
        max_holdout_ratio,
        hs_decades: (hi / lo).log10(),
    })
}

/// Midpoint `3C₂/(4‖u(0)‖²_{B^{1,1}_{2,l}})` of the admissible local-time
/// bracket `[C₂/(2‖u‖²), C₂/‖u‖²)`, capped at `cap`.
pub fn local_time(norm_b: f64, c2: f64, cap: f64) -> Result<f64> {
    if !(norm_b > 0.0) {
        return Err(Error::Degenerate(format!("local time needs a positive norm, got {norm_b}")));
    }
    Ok((0.75 * c2 / (norm_b * norm_b)).min(cap))
}

/// `C₇ / (h1² · log(hs) · log log(hs))` with the logarithms floored, capped at `cap`.
pub fn step_law(h1: f64, hs: f64, c7: f64, cap: f64) -> (f64, Clamps) {
    let (log, loglog, mut clamps) = log_factors(hs);
    let t = c7 / (h1 * h1 * log * loglog);
    clamps.interval = t > cap;
    (t.min(cap), clamps)
}

/// `Σ_{n=2}^{N} 1/(n log n)`, whose divergence lets the local intervals reach any time.
pub fn divergence_witness(n_max: u64) -> f64 {
    (2..=n_max).map(|n| 1.0 / (n as f64 * (n as f64).ln())).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    /// Sobolev index of the persistence norm.
    #[serde(default = "default_s")]
    pub s: f64,
    pub epsilon: f64,
    pub target_time: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Largest integrator step; each interval uses `min(dt, T_n/32)`.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default)]
    pub constants: Constants,
    /// Largest admissible interval length.
    #[serde(default = "default_max_interval")]
    pub max_interval: f64,
    /// Focusing runs need `mass ≤ ratio · ‖∇u‖²`.
    #[serde(default = "default_focusing_mass_ratio")]
    pub focusing_mass_ratio: f64,
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
}

fn default_s() -> f64 {
    2.0
}
fn default_max_steps() -> usize {
    1000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_max_interval() -> f64 {
    1.0
}
fn default_focusing_mass_ratio() -> f64 {
    0.1
}
fn default_mass_tolerance() -> f64 {
    1e-6
}

impl ContinuationConfig {
    pub fn new(epsilon: f64, target_time: f64) -> Self {
        Self {
            s: default_s(),
            epsilon,
            target_time,
            max_steps: default_max_steps(),
            dt: default_dt(),
            dealias: false,
            constants: Constants::default(),
            max_interval: default_max_interval(),
            focusing_mass_ratio: default_focusing_mass_ratio(),
            mass_tolerance: default_mass_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let positive = [self.target_time, self.dt, self.max_interval, self.mass_tolerance];
        if !(self.s > 1.0) || positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) || self.max_steps == 0 {
            return Err(Error::InvalidArgument(
                "continuation needs s > 1, positive target_time, dt, max_interval, mass_tolerance and max_steps".into(),
            ));
        }
        if !self.epsilon.is_finite() || !(self.focusing_mass_ratio >= 0.0) {
            return Err(Error::InvalidArgument("epsilon and focusing_mass_ratio must be finite".into()));
        }
        Ok(())
    }
}

/// One local interval; norms are taken at the start of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub n: usize,
    /// Interval length from the measured-norm step law.
    pub t_n: f64,
    /// Time at the end of the interval.
    pub cum_t: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖∇u‖`, the Dirichlet `H¹₀` norm.
    pub h1: f64,
    pub hs: f64,
    pub b11l: f64,
    /// `H^s` norm at the end of the interval.
    pub hs_end: f64,
    /// Local-time midpoint from the log-Besov norm.
    pub t_local: f64,
    /// Step law evaluated on frozen energy and the geometric `H^s` cap.
    pub t_cap: f64,
    pub clamps: Clamps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthAudit {
    /// `C₃`: the first interval's `H^s` growth factor, floored at 1.
    pub c3: f64,
    /// Largest `‖u‖_{H^s} / ((2C₃)^{steps}‖u(0)‖_{H^s})` over all start and end states.
    pub worst: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepBound {
    /// `C₈` such that the capped step law gives `T_n ≥ C₈/(n log n)` for `n ≥ 3`.
    pub c8: f64,
    /// `min_n T_n n log n / C₈` for the capped and the measured step laws.
    pub min_capped: f64,
    pub min_measured: f64,
}

impl StepBound {
    pub fn holds(&self) -> bool {
        self.min_capped >= 1.0 - 1e-12 && self.min_measured >= 1.0 - 1e-12
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationLedger {
    pub config: ContinuationConfig,
    pub rows: Vec<LedgerRow>,
    pub audit: GrowthAudit,
    pub step_bound: StepBound,
    /// Largest relative energy deviation from the initial energy.
    pub energy_drift: f64,
    /// Largest relative mass deviation from the initial mass.
    pub mass_drift: f64,
    /// Largest `‖∇u‖² / E(φ₀)` over the ledger rows.
    pub h1_over_energy: f64,
    pub reached_target: bool,
    #[serde(skip)]
    pub final_state: SpectralField,
}

pub const LEDGER_HEADER: [&str; 12] = [
    "n", "T_n", "cum_t", "mass", "E", "H1", "Hs", "B11l", "Hs_end", "T_local", "T_cap", "clamped_flags",
];

impl ContinuationLedger {
    pub fn final_time(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_t)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(LEDGER_HEADER).map_err(io)?;
        for r in &self.rows {
            let nums = [
                r.t_n, r.cum_t, r.mass, r.energy, r.h1, r.hs, r.b11l, r.hs_end, r.t_local, r.t_cap,
            ];
            let mut rec = vec![r.n.to_string()];
            rec.extend(nums.iter().map(|x| format!("{x:.17e}")));
            rec.push(r.clamps.to_string());
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Chain local intervals `T_n = C₇/(‖∇u‖² log‖u‖_{H^s} log log‖u‖_{H^s})`
/// until `target_time` or `max_steps`, auditing norm growth afterwards.
pub fn global_continuation(phi0: &SpectralField, config: &ContinuationConfig) -> Result<ContinuationLedger> {
    config.validate()?;
    let k = &config.constants;
    let mut stepper = SplitStepper::new(phi0, config.epsilon, config.dealias)?;
    let start = stepper.conserved();
    if start.kinetic == 0.0 {
        return Err(Error::Degenerate("continuation of the zero field".into()));
    }
    if config.epsilon < 0.0 && start.mass > config.focusing_mass_ratio * start.kinetic {
        return Err(Error::FocusingMass {
            mass: start.mass,
            threshold: config.focusing_mass_ratio * start.kinetic,
        });
    }
    let mut field = stepper.field();
    let mut hs = sobolev_norm(&field, config.s);
    let hs0 = hs;
    let mut rows: Vec<LedgerRow> = Vec::new();
    let (mut energy_drift, mut mass_drift, mut h1_ratio) = (0.0f64, 0.0f64, 0.0f64);
    while rows.len() < config.max_steps && stepper.time() < config.target_time {
        let now = stepper.conserved();
        let h1 = now.kinetic.sqrt();
        let b11l = log_besov_norm(&field);
        let (t_n, clamps) = step_law(h1, hs, k.c7, config.max_interval);
        let steps = (t_n / config.dt.min(t_n / 32.0)).ceil() as usize;
        stepper.advance(t_n / steps as f64, steps);
        let after = stepper.conserved();
        let drift = ((after.mass - start.mass) / start.mass).abs();
        if !(drift <= config.mass_tolerance) {
            return Err(Error::Instability {
                drift,
                limit: config.mass_tolerance,
                time: stepper.time(),
            });
        }
        mass_drift = mass_drift.max(drift);
        energy_drift = energy_drift.max(((after.energy - start.energy) / start.energy).abs());
        h1_ratio = h1_ratio.max(now.kinetic / start.energy).max(after.kinetic / start.energy);
        field = stepper.field();
        let hs_end = sobolev_norm(&field, config.s);
        rows.push(LedgerRow {
            n: rows.len() + 1,
            t_n,
            cum_t: stepper.time(),
            mass: now.mass,
            energy: now.energy,
            h1,
            hs,
            b11l,
            hs_end,
            t_local: local_time(b11l, k.c2, config.max_interval)?,
            t_cap: 0.0,
            clamps,
        });
        hs = hs_end;
    }

    // The persistence constant satisfies C₃ ≥ 1 (the norm at t = 0 is part of
    // the supremum); calibrate it from the first interval's growth.
    let c3 = (rows[0].hs_end / hs0).max(1.0);
    let growth = 2.0 * c3;
    let mut worst = 0.0f64;
    for r in &rows {
        let before = growth.powi(r.n as i32 - 1) * hs0;
        worst = worst.max(r.hs / before).max(r.hs_end / (before * growth));
    }
    let audit = GrowthAudit {
        c3,
        worst,
        holds: worst <= 1.0 + 1e-12,
    };

    // Capped step law: frozen energy, geometric H^s cap.
    let energy = start.energy;
    for r in rows.iter_mut() {
        let cap = growth.powi(r.n as i32 - 1) * hs0;
        r.t_cap = step_law(energy.sqrt(), cap, k.c7, config.max_interval).0;
    }
    let g = growth.ln();
    let a = (g + hs0.ln().max(0.0) / 3.0).max(2.0 / 3.0);
    let b = (1.0 + a.ln().max(0.0) / 3f64.ln()).max(2.0 / 3f64.ln());
    let c8 = (k.c7 / (energy * a * b)).min(config.max_interval * 3.0 * 3f64.ln());
    let bound = |t: fn(&LedgerRow) -> f64| {
        rows.iter()
            .filter(|r| r.n >= 3)
            .map(|r| t(r) * r.n as f64 * (r.n as f64).ln() / c8)
            .fold(f64::INFINITY, f64::min)
    };
    let step_bound = StepBound {
        c8,
        min_capped: bound(|r| r.t_cap),
        min_measured: bound(|r| r.t_n),
    };
    Ok(ContinuationLedger {
        reached_target: stepper.time() >= config.target_time,
        config: config.clone(),
        rows,
        audit,
        step_bound,
        energy_drift,
        mass_drift,
        h1_over_energy: h1_ratio,
        final_state: stepper.field(),
    })
}

/// Normalized band-`j` data scaled so that its energy `‖∇φ‖² + ε/2‖φ‖⁴₄` equals `energy`.
pub fn band_data_with_energy(
    basis: &Arc<EigenBasis>,
    j: u32,
    energy: f64,
    epsilon: f64,
    seed: u64,
) -> Result<SpectralField> {
    let f = crate::rng::band_field(basis, j, &mut stream(seed, &[0x4744, j as u64]));
    if f.norm() == 0.0 {
        return Err(Error::Degenerate(format!("band {j} holds no modes")));
    }
    let unit = crate::flow::conserved(&f, 1.0)?;
    // E(α) = α²K + (ε/2)α⁴Q; solve the quadratic in α².
    let (kin, quart) = (unit.kinetic, 0.5 * epsilon * unit.quartic);
    let a2 = if quart.abs() < 1e-300 {
        energy / kin
    } else {
        let disc = kin * kin + 4.0 * quart * energy;
        if disc < 0.0 {
            return Err(Error::InvalidArgument(format!("energy {energy} unreachable for focusing data")));
        }
        (-kin + disc.sqrt()) / (2.0 * quart)
    };
    if !(a2 > 0.0) {
        return Err(Error::InvalidArgument(format!("energy {energy} unreachable")));
    }
    Ok(f.scaled(Complex64::new(a2.sqrt(), 0.0)))
}
