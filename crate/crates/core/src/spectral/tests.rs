use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::basis::{DomainSpec, EigenBasis, SpectralField};
use crate::rng::{random_field, stream};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn cutoff_plateau_support_and_monotonicity() {
    assert_eq!(BumpFunction::cutoff(0.0), 1.0);
    assert_eq!(BumpFunction::cutoff(1.0), 1.0);
    assert_eq!(BumpFunction::cutoff(1.1), 0.0);
    assert_eq!(BumpFunction::cutoff(5.0), 0.0);
    assert!((BumpFunction::cutoff(1.05) - 0.5).abs() < 1e-12);
    let mut prev = 1.0;
    for i in 0..=1000 {
        let v = BumpFunction::cutoff(0.95 + 0.2 * i as f64 / 1000.0);
        assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
        prev = v;
    }
}

#[test]
fn band_profile_support() {
    for j in 0..6u32 {
        let lo = 2.0f64.powi(j as i32);
        assert_eq!(BumpFunction::band(j, lo), 0.0);
        assert_eq!(BumpFunction::band(j, 2.2 * lo), 0.0);
        assert_eq!(BumpFunction::band(j, 1.5 * lo), 1.0);
        assert!(BumpFunction::on_plateau(j, 2.0 * lo));
        assert!(!BumpFunction::on_plateau(j, 1.05 * lo));
    }
}

#[test]
fn partition_telescopes_pointwise() {
    for i in 0..2000 {
        let xi = 0.01 * i as f64;
        let total: f64 = BumpFunction::cutoff(xi) + (0..8).map(|j| BumpFunction::band(j, xi)).sum::<f64>();
        assert!((total - BumpFunction::cutoff(xi / 256.0)).abs() < 1e-15);
    }
}

#[test]
fn multiplier_examples() {
    let b = EigenBasis::new(DomainSpec::cube(6)).unwrap();
    let f = random_field(&b, &mut stream(1, &[]), |_| true);
    assert_eq!(apply_multiplier(&f, |_| 1.0, 0).coeffs(), f.coeffs());
    // √λ = 3 mode (1,2,2) with m = 2: Φ(3/4) = 1
    let m = SpectralField::mode(&b, [1, 2, 2]).unwrap();
    assert_eq!(apply_multiplier(&m, BumpFunction::cutoff, 2).coeffs(), m.coeffs());
    assert_eq!(BumpFunction::cutoff(5.0 / 8.0), 1.0);
    // outside the support: zeroed
    assert_eq!(apply_multiplier(&m, BumpFunction::cutoff, 1).norm(), 0.0);
}

#[test]
fn decomposition_reconstructs_exactly() {
    let b = EigenBasis::new(DomainSpec::cube(10)).unwrap();
    let j = LittlewoodPaley::covering_index(&b);
    for trial in 0..10 {
        let f = random_field(&b, &mut stream(4, &[trial]), |_| true);
        let parts = lp_decompose(&f, j).unwrap();
        assert_eq!(parts.len(), j as usize + 2);
        let mut sum = SpectralField::zeros(&b);
        for p in &parts {
            sum = sum.axpy(c(1.0), p).unwrap();
        }
        assert!(sum.axpy(c(-1.0), &f).unwrap().norm() < 1e-12);
    }
    assert!(matches!(lp_decompose(&SpectralField::zeros(&b), j - 1), Err(crate::Error::BandCoverage { .. })));
}

#[test]
fn single_mode_touches_at_most_two_bands() {
    let b = EigenBasis::new(DomainSpec::cube(4)).unwrap();
    let f = SpectralField::mode(&b, [1, 1, 1]).unwrap(); // √λ = √3
    let lp = LittlewoodPaley::covering(&b);
    let (low, bands) = lp.band_norms(&f);
    let nonzero = bands.iter().filter(|&&n| n > 0.0).count() + usize::from(low > 0.0);
    assert!((1..=2).contains(&nonzero));
    let zero = lp.decompose(&SpectralField::zeros(&b));
    assert!(zero.iter().all(|p| p.norm() == 0.0));
}

#[test]
fn single_band_besov_norm() {
    let b = EigenBasis::new(DomainSpec::cube(8)).unwrap();
    let f = SpectralField::mode(&b, [7, 7, 1]).unwrap(); // √99 on the plateau of band 3
    assert!(BumpFunction::on_plateau(3, 99f64.sqrt()));
    assert!((besov_norm(&f, 1.0, 2.0) - 8.0).abs() < 1e-12);
    assert!((besov_norm(&f, 1.0, f64::INFINITY) - 8.0).abs() < 1e-12);
    assert!((log_besov_norm(&f) - 8.0 * 3f64.ln().sqrt()).abs() < 1e-12);
}

#[test]
fn sobolev_zero_is_l2() {
    let b = EigenBasis::new(DomainSpec::cube(9)).unwrap();
    let f = random_field(&b, &mut stream(2, &[]), |_| true).scaled(c(2.5));
    // the band pieces of H^0 sum to the L² norm only up to overlap; the partition
    // of unity makes ‖S_0 f‖² + Σ‖Δ_j f‖² lie between ½‖f‖² and ‖f‖²
    let h0 = sobolev_norm(&f, 0.0);
    assert!(h0 <= f.norm() * (1.0 + 1e-12));
    assert!(h0 >= f.norm() / 2f64.sqrt());
}

#[test]
fn h1_norm_matches_direct_sum() {
    let b = EigenBasis::new(DomainSpec::cube(12)).unwrap();
    let f = random_field(&b, &mut stream(3, &[]), |_| true);
    // independent oracle: per-mode profile sums
    let mut direct = 0.0;
    for (m, cf) in b.modes().iter().zip(f.coeffs()) {
        let xi = m.eigenvalue.sqrt();
        let low = BumpFunction::cutoff(xi);
        let mut w = low * low;
        for j in 0..10u32 {
            let p = BumpFunction::band(j, xi);
            w += 4f64.powi(j as i32) * p * p;
        }
        direct += w * cf.norm_sqr();
    }
    assert!((sobolev_norm(&f, 1.0) - direct.sqrt()).abs() < 1e-12 * direct.sqrt());
}

#[test]
fn almost_orthogonality() {
    let b = EigenBasis::new(DomainSpec::cube(12)).unwrap();
    let lp = b.littlewood_paley();
    for trial in 0..20 {
        let f = random_field(&b, &mut stream(6, &[trial]), |_| true);
        let (low, bands) = lp.band_norms(&f);
        let s = low * low + bands.iter().map(|n| n * n).sum::<f64>();
        assert!(s <= 3.0 * f.norm_sq());
        assert!(s >= 0.5 * f.norm_sq() && s <= f.norm_sq() * (1.0 + 1e-12));
    }
}

#[test]
fn besov_equivalent_to_weighted_sum() {
    let b = EigenBasis::new(DomainSpec::cube(16)).unwrap();
    for s in [0.0, 0.5, 1.0, 2.0] {
        for trial in 0..20 {
            let f = random_field(&b, &mut stream(7, &[trial]), |_| true);
            let weighted: f64 = b
                .modes()
                .iter()
                .zip(f.coeffs())
                .map(|(m, cf)| (1.0 + m.eigenvalue).powf(s) * cf.norm_sqr())
                .sum();
            let ratio = besov_norm(&f, s, 2.0) / weighted.sqrt();
            assert!((1.0 / 3.0..=3.0).contains(&ratio), "s={s}: {ratio}");
        }
    }
}

#[test]
fn q_operator_properties() {
    let b = EigenBasis::new(DomainSpec::cube(8)).unwrap();
    for l in -2..6 {
        assert!(q_operator_norm(&b, l) <= (2.0 * std::f64::consts::E).powf(-0.5) + 1e-15);
    }
    let f = random_field(&b, &mut stream(5, &[]), |_| true);
    let big = q_operator(&f, 16).unwrap();
    let n: f64 = big.iter().map(|c| c.l2_sq()).sum();
    assert!(n < 1e-6);
    // single mode: diagonal action on the gradient
    let m = SpectralField::mode(&b, [2, 1, 3]).unwrap();
    let l = 1;
    let q = q_operator(&m, l).unwrap();
    let g = b.gradient(&m).unwrap();
    let factor = 0.5 * (-0.25 * 14.0f64).exp();
    for (qa, ga) in q.iter().zip(&g) {
        for (x, y) in qa.values().iter().zip(ga.values()) {
            assert!((x - y * factor).norm() < 1e-13);
        }
    }
}

#[test]
fn d_operator_inverts_scaled_laplacian_on_band() {
    let b = EigenBasis::new(DomainSpec::cube(16)).unwrap();
    for j in 1..4u32 {
        let u = random_field(&b, &mut stream(8, &[j as u64]), |m| BumpFunction::band(j, m.frequency()) != 0.0);
        let du = d_operator(&u, j);
        let back = du.map_eigen(|lam| c(lam * 4f64.powi(-(j as i32))));
        assert!(back.axpy(c(-1.0), &u).unwrap().norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multipliers_bounded_by_one_never_grow_coefficients(seed in any::<u64>(), m in -3i32..6, j in 0u32..5) {
        let b = EigenBasis::new(DomainSpec::cube(6)).unwrap();
        let f = random_field(&b, &mut stream(seed, &[]), |_| true);
        let g = apply_multiplier(&f, |xi| BumpFunction::band(j, xi), m);
        for (x, y) in g.coeffs().iter().zip(f.coeffs()) {
            prop_assert!(x.norm() <= y.norm() * (1.0 + 1e-15));
        }
    }

    #[test]
    fn telescoping_for_any_admissible_cut(seed in any::<u64>(), extra in 0u32..3) {
        let b = EigenBasis::new(DomainSpec::ball(20)).unwrap();
        let f = random_field(&b, &mut stream(seed, &[2]), |_| true);
        let j = LittlewoodPaley::covering_index(&b) + extra;
        let parts = lp_decompose(&f, j).unwrap();
        let mut sum = SpectralField::zeros(&b);
        for p in &parts { sum = sum.axpy(c(1.0), p).unwrap(); }
        prop_assert!(sum.axpy(c(-1.0), &f).unwrap().norm() < 1e-12);
    }
}
