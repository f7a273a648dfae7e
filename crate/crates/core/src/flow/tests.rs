use super::*;
use crate::basis::{DomainSpec, EigenBasis};
use crate::quadrature::ls_slope;
use crate::rng::{random_field, stream};

fn cube(n: usize) -> Arc<EigenBasis> {
    EigenBasis::new(DomainSpec::cube(n)).unwrap()
}

fn sample(basis: &Arc<EigenBasis>, seed: u64, amplitude: f64, max_index: usize) -> SpectralField {
    let mut rng = stream(seed, &[0]);
    random_field(basis, &mut rng, |m| m.index.iter().all(|&i| i <= max_index)).scaled(Complex64::new(amplitude, 0.0))
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn single_mode_phase() {
    let basis = cube(2);
    let f = SpectralField::mode(&basis, [1, 1, 1]).unwrap();
    let g = linear_evolve(&f, PI);
    assert!((g.coeffs()[0] + Complex64::new(1.0, 0.0)).norm() < 1e-12);
    let id = linear_evolve(&f, 0.0);
    assert_eq!(id.coeffs(), f.coeffs());
}

#[test]
fn linear_group_law_and_unitarity() {
    let basis = cube(6);
    let f = sample(&basis, 1, 1.0, 6);
    for (t, s) in [(0.3, 0.7), (1.1, -2.5), (5.0, 5.0)] {
        let two = linear_evolve(&linear_evolve(&f, s), t);
        let one = linear_evolve(&f, t + s);
        assert!(max_diff(&one, &two) < 1e-12);
    }
    for k in 0..=100 {
        let t = 0.1 * k as f64;
        assert!((linear_evolve(&f, t).norm() - f.norm()).abs() < 1e-12);
    }
}

#[test]
fn linear_flow_commutes_with_multipliers() {
    let basis = cube(5);
    let f = sample(&basis, 2, 1.0, 5);
    let m = |l: f64| Complex64::new(1.0 / (1.0 + l), 0.0);
    let a = linear_evolve(&f.map_eigen(m), 0.9);
    let b = linear_evolve(&f, 0.9).map_eigen(m);
    assert!(max_diff(&a, &b) < 1e-12);
}

#[test]
fn linear_split_step_is_exact() {
    let basis = cube(5);
    let f = sample(&basis, 3, 2.0, 5);
    let stepped = nls_step(&f, 0.37, 0.0).unwrap();
    let exact = linear_evolve(&f.transfer(stepped.basis()).unwrap(), 0.37);
    assert!(max_diff(&stepped, &exact) < 1e-12);
}

#[test]
fn config_validation() {
    assert!(FlowConfig::new(0.5, 0.1).validate().is_err());
    assert!(FlowConfig::new(1.0, 0.0).validate().is_err());
    assert!(FlowConfig::new(-1.0, 1e-3).validate().is_ok());
    let parsed: std::result::Result<FlowConfig, _> =
        serde_json::from_str(r#"{"epsilon":1,"dt":0.01,"bogus":1}"#);
    assert!(parsed.is_err());
}

#[test]
fn mass_is_conserved_by_split_step() {
    let basis = cube(6);
    let f = sample(&basis, 4, 3.0, 6);
    let mut s = SplitStepper::new(&f, 1.0, false).unwrap();
    let m0 = s.conserved().mass;
    s.advance(1e-3, 1000);
    let m1 = s.conserved().mass;
    assert!(((m1 - m0) / m0).abs() < 1e-10, "mass drift {}", (m1 - m0) / m0);
}

#[test]
fn ball_mass_is_conserved() {
    let basis = EigenBasis::new(DomainSpec::ball(16)).unwrap();
    let f = sample(&basis, 5, 3.0, 16);
    let mut s = SplitStepper::new(&f, -1.0, false).unwrap();
    let m0 = s.conserved().mass;
    s.advance(1e-4, 500);
    assert!(((s.conserved().mass - m0) / m0).abs() < 1e-10);
}

#[test]
fn dealias_filter_keeps_original_modes() {
    let basis = cube(4);
    let f = sample(&basis, 6, 3.0, 4);
    let mut s = SplitStepper::new(&f, 1.0, true).unwrap();
    s.advance(1e-2, 10);
    let field = s.field();
    for (m, c) in field.basis().modes().iter().zip(field.coeffs()) {
        if m.index.iter().any(|&i| i > 4) {
            assert_eq!(c.norm(), 0.0);
        }
    }
}

#[test]
fn time_reversal() {
    let basis = cube(5);
    let f = sample(&basis, 7, 2.0, 5);
    let mut s = SplitStepper::new(&f, 1.0, false).unwrap();
    s.advance(1e-2, 20);
    s.advance(-1e-2, 20);
    let back = s.field();
    let start = f.transfer(back.basis()).unwrap();
    assert!(max_diff(&back, &start) < 1e-10);
}

/// Global error at a fixed time for a sequence of step sizes, against a
/// reference computed with a 16× finer step.
fn strang_errors(eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let basis = cube(4);
    let f = sample(&basis, 8, 4.0, 3);
    let t_end = 0.2;
    let counts = [8usize, 16, 32, 64];
    let run = |steps: usize| {
        let mut s = SplitStepper::new(&f, eps, false).unwrap();
        let e0 = s.conserved().energy;
        s.advance(t_end / steps as f64, steps);
        let drift = (s.conserved().energy - e0).abs();
        (s.field(), drift)
    };
    let (reference, _) = run(64 * 16);
    let mut dts = Vec::new();
    let mut errs = Vec::new();
    let mut drifts = Vec::new();
    for &n in &counts {
        let (u, drift) = run(n);
        dts.push((t_end / n as f64).log2());
        let diff = u
            .coeffs()
            .iter()
            .zip(reference.coeffs())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        errs.push(diff.log2());
        drifts.push(drift.log2());
    }
    (dts, errs, drifts)
}

#[test]
fn strang_is_second_order() {
    let (dts, errs, drifts) = strang_errors(1.0);
    let order = ls_slope(&dts, &errs).unwrap();
    assert!((order - 2.0).abs() < 0.2, "order {order}, errors {errs:?}");
    let energy_order = ls_slope(&dts, &drifts).unwrap();
    assert!((energy_order - 2.0).abs() < 0.3, "energy order {energy_order}, drifts {drifts:?}");
}

#[test]
fn defocusing_energy_controls_kinetic_term() {
    let basis = cube(5);
    let f = sample(&basis, 9, 3.0, 5);
    let traj = run_trajectory(&f, &FlowConfig::new(1.0, 2e-3), 0.2, 1.0).unwrap();
    let e0 = traj.rows[0].energy;
    for row in &traj.rows {
        assert!(row.energy >= 0.0);
        assert!(row.h1 * row.h1 <= e0 * (1.0 + 1e-3));
    }
}

#[test]
fn conserved_values_for_a_single_mode() {
    let basis = cube(3);
    let f = SpectralField::mode(&basis, [1, 1, 1]).unwrap();
    let c = conserved(&f, 0.0).unwrap();
    assert!((c.mass - 1.0).abs() < 1e-12);
    assert!((c.energy - 3.0).abs() < 1e-12);
    // ∫ e⁴ over the cube = (2/π)^6 (3π/8)^3.
    let quartic = (2.0 / PI).powi(6) * (3.0 * PI / 8.0).powi(3);
    let c = conserved(&f, 1.0).unwrap();
    assert!((c.quartic - quartic).abs() < 1e-12);
    let s = SplitStepper::new(&f, 1.0, false).unwrap().conserved();
    assert!((s.quartic - quartic).abs() < 1e-12);
}

#[test]
fn trajectory_rows_follow_cadence() {
    let basis = cube(3);
    let f = sample(&basis, 10, 1.0, 3);
    let mut cfg = FlowConfig::new(-1.0, 1e-2);
    cfg.snapshot_every = 4;
    let traj = run_trajectory(&f, &cfg, 0.1, 1.0).unwrap();
    let steps: Vec<usize> = traj.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 4, 8, 10]);
    assert!((traj.rows.last().unwrap().t - 0.1).abs() < 1e-12);
}

#[test]
fn simpson_time_integral_of_mass() {
    let basis = cube(4);
    let f = sample(&basis, 11, 1.5, 4);
    let v = linear_time_integral(&f, 2.0, 65, |g| Ok(g.norm_sq())).unwrap();
    assert!((v - 2.0 * f.norm_sq()).abs() < 1e-10);
}
