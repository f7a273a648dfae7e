//! One function per subcommand. Each returns its files as bytes plus the
//! checks it ran; nothing is written until the whole command succeeded.

use std::fmt::Write as _;

use dirichlet_nls::basis::snapshot::{encode_coefficients, SnapshotDescriptor};
use dirichlet_nls::driver::{divergence_witness, global_continuation, log_sobolev_study, LogSobolevCheck};
use dirichlet_nls::estimates::{scaling_study, trace_sweep, EstimateId, EstimateReport, StudyConfig};
use dirichlet_nls::flow::{run_trajectory, FlowConfig};
use dirichlet_nls::rng::{band_field, random_field, stream};
use dirichlet_nls::spectral::bands_of;
use dirichlet_nls::virial::{
    direction_set, momentum_fd_check, second_derivative_csv, virial_second_derivative_check, DirectionalWeight,
};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{RunConfig, ScanOptions};
use crate::{Check, CliError, Command, CommandOutput};

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::LpCheck => lp_check(cfg),
        Command::BilinearScan => scan(cfg, &cfg.bilinear_scan),
        Command::L4Scan => scan(cfg, &cfg.l4_scan),
        Command::TraceCheck => trace_check(cfg),
        Command::VirialCheck => virial_check(cfg),
        Command::LogsobolevCheck => logsobolev_check(cfg),
        Command::GlobalRun => global_run(cfg),
    }
}

fn seed(cfg: &RunConfig) -> Result<u64, CliError> {
    cfg.seed.ok_or_else(|| CliError::Usage("this command needs a seed".into()))
}

fn simulate(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &cfg.simulate;
    let basis = cfg.basis()?;
    let phi = o.initial.build(&basis, o.epsilon, cfg.seed)?;
    let mut flow = FlowConfig::new(o.epsilon, o.dt);
    flow.dealias = o.dealias;
    flow.snapshot_every = o.snapshot_every;
    let traj = run_trajectory(&phi, &flow, o.t_end, o.s)?;
    let mut out = CommandOutput::default();
    let mut csv = String::from("step,t,mass,energy,h1,hs\n");
    for r in &traj.rows {
        let _ = writeln!(csv, "{},{:e},{:e},{:e},{:e},{:e}", r.step, r.t, r.mass, r.energy, r.h1, r.hs);
    }
    out.file("trajectory.csv", csv);
    for (i, (t, f)) in traj.snapshots.iter().enumerate() {
        let desc = SnapshotDescriptor::for_field(f, Some(*t));
        out.file(format!("snapshots/field_{i:05}.json"), serde_json::to_vec_pretty(&desc)?);
        out.file(format!("snapshots/field_{i:05}.bin"), encode_coefficients(f.coeffs()));
    }
    let m0 = traj.rows[0].mass;
    let mass_drift = traj.rows.iter().map(|r| ((r.mass - m0) / m0).abs()).fold(0.0, f64::max);
    out.checks.push(Check::at_most("mass_drift", mass_drift, o.mass_tolerance));
    Ok(out)
}

fn lp_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &cfg.lp_check;
    let basis = cfg.basis()?;
    let lp = bands_of(&basis);
    let seed = seed(cfg)?;
    let rows: Vec<(u32, f64, f64)> = (0..o.trials)
        .into_par_iter()
        .map(|trial| -> Result<_, CliError> {
            let f = random_field(&basis, &mut stream(seed, &[0x4C50, trial as u64]), |_| true);
            let mut sum = dirichlet_nls::basis::SpectralField::zeros(&basis);
            for piece in lp.decompose(&f) {
                sum = sum.axpy(Complex64::new(1.0, 0.0), &piece)?;
            }
            let recon = sum.axpy(Complex64::new(-1.0, 0.0), &f)?.norm() / f.norm();
            let back = basis.analyze(&basis.synthesize(&f)?)?;
            let roundtrip = back.axpy(Complex64::new(-1.0, 0.0), &f)?.norm() / f.norm();
            Ok((trial, recon, roundtrip))
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("trial,reconstruction_residual,roundtrip_residual\n");
    for (t, a, b) in &rows {
        let _ = writeln!(csv, "{t},{a:e},{b:e}");
    }
    let worst = |f: fn(&(u32, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let mut out = CommandOutput::default();
    out.file("lp_check.csv", csv);
    out.checks.push(Check::at_most("reconstruction_residual", worst(|r| r.1), o.tolerance));
    out.checks.push(Check::at_most("roundtrip_residual", worst(|r| r.2), o.tolerance));
    Ok(out)
}

fn scan(cfg: &RunConfig, o: &ScanOptions) -> Result<CommandOutput, CliError> {
    let basis = cfg.basis()?;
    let study = StudyConfig {
        estimates: o.estimates.clone(),
        j_range: o.j_range,
        k_range: o.k_range,
        trials: o.trials,
        seed: seed(cfg)?,
        horizon: o.horizon,
        simpson_nodes: o.simpson_nodes,
    };
    let reports = scaling_study(&basis, &study)?;
    let mut out = CommandOutput::default();
    let mut summaries = Vec::new();
    for r in &reports {
        out.file(format!("{}.csv", r.estimate.as_str()), r.to_csv()?);
        let s = r.summary();
        out.checks.push(Check::flag(format!("{}_positive_finite", r.estimate), s.all_positive_finite));
        if let (Some(tol), Some(slope)) = (o.slope_tolerance, s.slope_j) {
            // The short-horizon global rows carry an explicit 2^j factor by design.
            if r.estimate != EstimateId::GlobalTimeShort {
                out.checks.push(Check::at_most(format!("{}_slope_j", r.estimate), slope, tol));
            }
        }
        summaries.push(s);
    }
    if let Some(gap) = semiclassical_identity_gap(&reports) {
        out.checks.push(Check::at_most("semiclassical_identity", gap, 1e-12));
    }
    out.file("summary.json", serde_json::to_vec_pretty(&summaries)?);
    Ok(out)
}

/// Largest relative gap in `ratio₅ = ratio₆ · T 2^j` over matching rows.
pub fn semiclassical_identity_gap(reports: &[EstimateReport]) -> Option<f64> {
    let find = |e| reports.iter().find(|r| r.estimate == e);
    let (five, six) = (find(EstimateId::Semiclassical)?, find(EstimateId::GlobalTimeShort)?);
    Some(
        five.rows
            .iter()
            .zip(&six.rows)
            .map(|(a, b)| {
                let predicted = b.ratio * a.t * (a.j as f64).exp2();
                (a.ratio - predicted).abs() / a.ratio.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max),
    )
}

fn trace_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &cfg.trace_check;
    let sweep = trace_sweep(&cfg.basis()?, &o.bands, o.trials, seed(cfg)?)?;
    let mut out = CommandOutput::default();
    out.file("trace.csv", sweep.report.to_csv()?);
    out.file("summary.json", serde_json::to_vec_pretty(&sweep)?);
    out.checks.push(Check::at_most("lambda_spread", sweep.spread, o.spread_tolerance));
    Ok(out)
}

fn virial_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &cfg.virial_check;
    let basis = cfg.basis()?;
    let seed = seed(cfg)?;
    let directions = direction_set(seed, o.extra_directions);
    let mut tasks = Vec::new();
    for &[j, k] in &o.pairs {
        for &d in &directions {
            tasks.push((j, k, d));
        }
    }
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(j, k, d)| -> Result<_, CliError> {
            let u = band_field(&basis, j, &mut stream(seed, &[0x5649, j as u64, k as u64, 0]));
            let v = band_field(&basis, k, &mut stream(seed, &[0x5649, j as u64, k as u64, 1]));
            if u.norm() == 0.0 || v.norm() == 0.0 {
                return Err(CliError::Config(format!("band pair ({j}, {k}) is empty on this basis")));
            }
            let w = DirectionalWeight::new(d, k as i32)?;
            let first = momentum_fd_check(&u, &v, &w, o.fd_time)?;
            let second = if o.second_times.is_empty() {
                Vec::new()
            } else {
                virial_second_derivative_check(&u, &v, &w, &o.second_times)?
            };
            Ok((j, k, d, first, second))
        })
        .collect::<Result<_, _>>()?;
    let mut first_csv = String::from("j,k,omega_x,omega_y,omega_z,t,step,richardson,formula,residual\n");
    let mut second = Vec::new();
    for (j, k, d, r, s) in &results {
        let _ = writeln!(
            first_csv,
            "{j},{k},{},{},{},{},{:e},{:e},{:e},{:e}",
            d[0], d[1], d[2], r.t, r.step, r.richardson, r.formula, r.residual
        );
        second.extend(s.iter().cloned());
    }
    let mut out = CommandOutput::default();
    out.file("first_derivative.csv", first_csv);
    let fd_worst = results.iter().map(|r| r.3.residual).fold(0.0, f64::max);
    out.checks.push(Check::at_most("momentum_fd_residual", fd_worst, o.fd_tolerance));
    if !second.is_empty() {
        out.file("second_derivative.csv", second_derivative_csv(&second));
        let min_order = second.iter().map(|r| r.order).fold(f64::INFINITY, f64::min);
        let finest = second
            .iter()
            .map(|r| r.residuals.last().copied().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        out.checks.push(Check::at_least("second_derivative_order", min_order, 1.0));
        out.checks.push(Check::at_most("second_derivative_residual", finest, o.second_tolerance));
        out.checks.push(Check::flag("second_derivative_converged", second.iter().all(|r| r.converged)));
    }
    Ok(out)
}

fn logsobolev_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &cfg.logsobolev_check;
    let study = log_sobolev_study(&cfg.basis()?, seed(cfg)?, o.calibration, o.holdout, o.margin)?;
    let mut csv = String::from("set,index,s,l2,h1,hs,b11l,j_cut,lhs,rhs,ratio,clamped_flags\n");
    let mut rows = |set: &str, checks: &[LogSobolevCheck]| {
        for (i, c) in checks.iter().enumerate() {
            let p = &c.params;
            let _ = writeln!(
                csv,
                "{set},{i},{},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e},{}",
                p.s, p.l2, p.h1, p.hs, p.b11l, p.j_cut, c.lhs, c.rhs, c.ratio, p.clamps
            );
        }
    };
    rows("calibration", &study.calibration);
    rows("holdout", &study.holdout);
    let mut out = CommandOutput::default();
    out.file("logsobolev.csv", csv);
    out.file(
        "summary.json",
        serde_json::to_vec_pretty(&serde_json::json!({
            "c5": study.c5,
            "c6": study.c6,
            "margin": study.margin,
            "max_holdout_ratio": study.max_holdout_ratio,
            "hs_decades": study.hs_decades,
        }))?,
    );
    out.checks.push(Check::at_most("holdout_ratio", study.max_holdout_ratio, 1.0));
    Ok(out)
}

fn global_run(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let o = &cfg.global_run;
    let basis = cfg.basis()?;
    let phi = o.initial.build(&basis, o.continuation.epsilon, cfg.seed)?;
    let ledger = global_continuation(&phi, &o.continuation)?;
    let mut out = CommandOutput::default();
    out.file("ledger.csv", ledger.to_csv()?);
    out.file("summary.json", serde_json::to_vec_pretty(&ledger)?);
    out.checks.push(Check::flag("reached_target", ledger.reached_target));
    out.checks.push(Check::at_most("growth_audit", ledger.audit.worst, 1.0 + 1e-12));
    out.checks.push(Check::at_least("step_bound_capped", ledger.step_bound.min_capped, 1.0 - 1e-12));
    out.checks.push(Check::at_least("step_bound_measured", ledger.step_bound.min_measured, 1.0 - 1e-12));
    if o.continuation.epsilon >= 0.0 {
        out.checks.push(Check::at_most("energy_drift", ledger.energy_drift, o.energy_tolerance));
        out.checks.push(Check::at_most("h1_over_energy", ledger.h1_over_energy, 1.0 + 1e-6));
    }
    if let Some(n) = o.min_intervals {
        out.checks.push(Check::at_least("intervals", ledger.rows.len() as f64, n as f64));
    }
    let growth = divergence_witness(1_000_000) - divergence_witness(1_000);
    out.checks.push(Check::at_least("divergence_witness_growth", growth, 0.5));
    Ok(out)
}
