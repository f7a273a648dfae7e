use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::rng::{random_field, stream};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn cube_n2_eigenvalues() {
    let b = EigenBasis::new(DomainSpec::cube(2)).unwrap();
    let eig: Vec<f64> = b.modes().iter().map(|m| m.eigenvalue).collect();
    assert_eq!(eig, vec![3.0, 6.0, 6.0, 6.0, 9.0, 9.0, 9.0, 12.0]);
    // ties broken lexicographically
    assert_eq!(b.modes()[1].index, [1, 1, 2]);
    assert_eq!(b.modes()[3].index, [2, 1, 1]);
}

#[test]
fn ball_n3_eigenvalues() {
    let b = EigenBasis::new(DomainSpec::ball(3)).unwrap();
    let eig: Vec<f64> = b.modes().iter().map(|m| m.eigenvalue).collect();
    for (e, n) in eig.iter().zip(1..) {
        assert!((e - (n as f64 * PI).powi(2)).abs() < 1e-12);
    }
}

#[test]
fn single_index_enumeration_and_rejections() {
    let m = cube_modes(1);
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].eigenvalue, 3.0);
    assert!(matches!(
        EigenBasis::new(DomainSpec::cube(1)),
        Err(crate::Error::InvalidDomain(_))
    ));
    assert!(EigenBasis::new(DomainSpec::cube(4).with_oversampling(1)).is_err());
    assert!(EigenBasis::new(DomainSpec::ball(1)).is_err());
}

#[test]
fn eigenvalues_sorted() {
    let b = EigenBasis::new(DomainSpec::cube(9)).unwrap();
    assert!(b.modes().windows(2).all(|w| w[0].eigenvalue <= w[1].eigenvalue));
    assert_eq!(b.len(), 729);
}

#[test]
fn cube_orthonormality_by_quadrature() {
    let b = EigenBasis::new(DomainSpec::cube(4)).unwrap();
    let samples: Vec<PhysicalField> = (0..b.len())
        .map(|i| {
            let mut f = SpectralField::zeros(&b);
            f.coeffs_mut()[i] = c(1.0);
            b.synthesize(&f).unwrap()
        })
        .collect();
    for (i, si) in samples.iter().enumerate() {
        for (j, sj) in samples.iter().enumerate().skip(i) {
            let ip: Complex64 = si
                .values()
                .iter()
                .zip(sj.values())
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
                * b.grid().weight(0);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).norm() < 1e-10, "({i},{j}) -> {ip}");
        }
    }
}

#[test]
fn ball_orthonormality_by_quadrature() {
    let b = EigenBasis::new(DomainSpec::ball(12)).unwrap();
    let samples: Vec<PhysicalField> = (0..b.len())
        .map(|i| {
            let mut f = SpectralField::zeros(&b);
            f.coeffs_mut()[i] = c(1.0);
            b.synthesize(&f).unwrap()
        })
        .collect();
    let w = b.grid().radial_weights();
    for (i, si) in samples.iter().enumerate() {
        for (j, sj) in samples.iter().enumerate() {
            let ip: Complex64 = si
                .values()
                .iter()
                .zip(sj.values())
                .zip(w)
                .map(|((a, b), w)| a * b.conj() * *w)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).norm() < 1e-10);
        }
    }
}

#[test]
fn center_value_of_fundamental_mode() {
    let b = EigenBasis::new(DomainSpec::cube(2)).unwrap();
    let f = SpectralField::mode(&b, [1, 1, 1]).unwrap();
    let phys = b.synthesize(&f).unwrap();
    let g = b.grid().size();
    let mid = g.div_ceil(2) - 1;
    let idx = (mid * g + mid) * g + mid;
    assert_eq!(b.grid().point(idx), [PI / 2.0; 3]);
    assert!((phys.values()[idx] - c((2.0 / PI).powf(1.5))).norm() < 1e-14);
    assert!((f.value_at([PI / 2.0; 3]) - c((2.0 / PI).powf(1.5))).norm() < 1e-14);
}

#[test]
fn zero_field_synthesizes_and_analyzes_to_zero() {
    let b = EigenBasis::new(DomainSpec::cube(3)).unwrap();
    let z = SpectralField::zeros(&b);
    assert!(b.synthesize(&z).unwrap().max_abs() == 0.0);
    let g = PhysicalField::new(b.grid().clone(), vec![c(0.0); b.grid().len()]).unwrap();
    assert!(b.analyze(&g).unwrap().norm() == 0.0);
    assert!(b.normal_trace(&z).unwrap().integral_sq() == 0.0);
}

#[test]
fn analyze_sampled_eigenfunction() {
    let b = EigenBasis::new(DomainSpec::cube(4)).unwrap();
    let norm = cube_norm();
    let g = PhysicalField::from_fn(b.grid(), |x| c(norm * (2.0 * x[0]).sin() * x[1].sin() * x[2].sin()));
    let f = b.analyze(&g).unwrap();
    let pos = b.position([2, 1, 1]).unwrap();
    for (i, v) in f.coeffs().iter().enumerate() {
        let want = if i == pos { 1.0 } else { 0.0 };
        assert!((v - want).norm() < 1e-10);
    }
}

#[test]
fn roundtrip_random_fields_both_domains() {
    for spec in [DomainSpec::cube(8), DomainSpec::ball(40), DomainSpec::cube(5).with_oversampling(3)] {
        let b = EigenBasis::new(spec).unwrap();
        for trial in 0..5 {
            let f = random_field(&b, &mut stream(11, &[trial]), |_| true);
            let back = b.analyze(&b.synthesize(&f).unwrap()).unwrap();
            let err = back.axpy(c(-1.0), &f).unwrap().norm();
            assert!(err < 1e-10, "{spec:?}: {err}");
        }
    }
}

#[test]
fn gradient_vanishes_at_center_for_fundamental_mode() {
    let b = EigenBasis::new(DomainSpec::cube(2)).unwrap();
    let f = SpectralField::mode(&b, [1, 1, 1]).unwrap();
    let grad = b.gradient(&f).unwrap();
    let g = b.grid().size();
    let mid = g.div_ceil(2) - 1;
    let idx = (mid * g + mid) * g + mid;
    for comp in &grad {
        assert!(comp.values()[idx].norm() < 1e-14);
    }
}

#[test]
fn dirichlet_form_identity() {
    for spec in [DomainSpec::cube(7), DomainSpec::ball(30)] {
        let b = EigenBasis::new(spec).unwrap();
        let f = random_field(&b, &mut stream(5, &[1]), |_| true);
        let quad = b.dirichlet_form_quadrature(&f).unwrap();
        let exact = f.dirichlet_form();
        assert!((quad - exact).abs() < 1e-8 * exact, "{spec:?}: {quad} vs {exact}");
    }
}

#[test]
fn ball_boundary_derivative_of_first_mode() {
    let b = EigenBasis::new(DomainSpec::ball(4)).unwrap();
    let f = SpectralField::mode(&b, [1, 0, 0]).unwrap();
    let trace = b.normal_trace(&f).unwrap();
    let want = -PI / (2.0 * PI).sqrt();
    assert!((trace.values()[0] - c(want)).norm() < 1e-14);
    assert!((b.boundary_flux_energy(&f) - 4.0 * PI * want * want).abs() < 1e-12);
    // radial derivative on a Gauss grid reaching close to r = 1
    let grid = Grid::radial_gauss(64);
    let d = Sampler::new(&grid).gradient(&f).unwrap();
    let last = grid.axis_points().len() - 1;
    let r = grid.axis_points()[last];
    let exact = ball_norm() * (PI * (PI * r).cos() / r - (PI * r).sin() / (r * r));
    assert!((d[0].values()[last] - c(exact)).norm() < 1e-12);
}

#[test]
fn laplacian_powers() {
    let b = EigenBasis::new(DomainSpec::cube(3)).unwrap();
    let f = random_field(&b, &mut stream(2, &[]), |_| true);
    assert_eq!(f.laplacian_power(0).coeffs(), f.coeffs());
    let m = SpectralField::mode(&b, [1, 1, 1]).unwrap();
    assert_eq!(m.laplacian_power(1).coeffs()[0], c(-3.0));
    let twice = f.laplacian_power(1).laplacian_power(1);
    let direct = f.laplacian_power(2);
    for (a, d) in twice.coeffs().iter().zip(direct.coeffs()) {
        assert!((a - d).norm() <= 1e-12 * d.norm().max(1.0));
    }
}

#[test]
fn normal_trace_face_formula() {
    let b = EigenBasis::new(DomainSpec::cube(4)).unwrap();
    let (a, bb, cc) = (3usize, 2usize, 1usize);
    let f = SpectralField::mode(&b, [a, bb, cc]).unwrap();
    let trace = b.normal_trace(&f).unwrap();
    let pts = b.grid().axis_points();
    let g = b.grid().size();
    let face0 = trace.face(0);
    for p in 0..g {
        for q in 0..g {
            let want = -(a as f64) * cube_norm() * (bb as f64 * pts[p]).sin() * (cc as f64 * pts[q]).sin();
            assert!((face0[p * g + q] - c(want)).norm() < 1e-12);
        }
    }
    // face x = π carries the factor (−1)^a with outward normal +x
    let face1 = trace.face(1);
    let want = (a as f64) * (-1.0f64).powi(a as i32) * cube_norm() * (bb as f64 * pts[1]).sin() * (cc as f64 * pts[2]).sin();
    assert!((face1[g + 2] - c(want)).norm() < 1e-12);
}

fn dense_boundary_integral(f: &SpectralField) -> f64 {
    // direct summation of ∂_n f at every face sample
    let b = f.basis();
    let trace = b.normal_trace(f).unwrap();
    let h = b.grid().spacing();
    trace
        .samples()
        .iter()
        .map(|s| {
            let mut v = Complex64::new(0.0, 0.0);
            for (m, &cf) in b.modes().iter().zip(f.coeffs()) {
                let mut grad = [0.0; 3];
                for (axis, g) in grad.iter_mut().enumerate() {
                    let mut prod = cube_norm();
                    for d in 0..3 {
                        let k = m.index[d] as f64;
                        prod *= if d == axis { k * (k * s.position[d]).cos() } else { (k * s.position[d]).sin() };
                    }
                    *g = prod;
                }
                let dn: f64 = (0..3).map(|d| grad[d] * s.normal[d]).sum();
                v += cf * dn;
            }
            v.norm_sqr() * h * h
        })
        .sum()
}

#[test]
fn boundary_integral_two_ways() {
    let b = EigenBasis::new(DomainSpec::cube(4)).unwrap();
    for index in [[1, 1, 1], [2, 3, 1], [4, 4, 2]] {
        let f = SpectralField::mode(&b, index).unwrap();
        let transform = b.normal_trace(&f).unwrap().integral_sq();
        let dense = dense_boundary_integral(&f);
        let exact = b.boundary_flux_energy(&f);
        assert!((transform - dense).abs() < 1e-8 * dense);
        assert!((transform - exact).abs() < 1e-8 * exact);
    }
    let f = random_field(&b, &mut stream(9, &[]), |_| true);
    let transform = b.normal_trace(&f).unwrap().integral_sq();
    assert!((transform - dense_boundary_integral(&f)).abs() < 1e-8 * transform);
    assert!((transform - b.boundary_flux_energy(&f)).abs() < 1e-8 * transform);
}

#[test]
fn fields_vanish_on_the_boundary() {
    let b = EigenBasis::new(DomainSpec::cube(6)).unwrap();
    let f = random_field(&b, &mut stream(4, &[]), |_| true);
    for p in [[0.0, 1.0, 2.0], [PI, 0.3, 1.7], [0.4, PI, 2.2], [1.1, 0.9, 0.0], [2.0, 2.5, PI]] {
        assert!(f.value_at(p).norm() < 1e-12);
    }
    let bb = EigenBasis::new(DomainSpec::ball(10)).unwrap();
    let g = random_field(&bb, &mut stream(4, &[1]), |_| true);
    assert!(g.value_at([1.0, 0.0, 0.0]).norm() < 1e-12);
}

#[test]
fn resolved_basis_extends_modes() {
    let b = EigenBasis::new(DomainSpec::cube(3)).unwrap();
    let r = b.resolved();
    assert_eq!(r.n_axis(), 5);
    assert_eq!(r.len(), 125);
    assert!(r.grid() == b.grid());
    let f = random_field(&b, &mut stream(1, &[]), |_| true);
    let lifted = f.transfer(&r).unwrap();
    assert!((lifted.norm_sq() - f.norm_sq()).abs() < 1e-14);
    let a = b.synthesize(&f).unwrap();
    let l = r.synthesize(&lifted).unwrap();
    for (x, y) in a.values().iter().zip(l.values()) {
        assert!((x - y).norm() < 1e-12);
    }
    let back = lifted.transfer(&b).unwrap();
    assert_eq!(back.coeffs(), f.coeffs());
}

#[test]
fn snapshot_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let b = EigenBasis::new(DomainSpec::cube(3)).unwrap();
    let f = random_field(&b, &mut stream(8, &[]), |_| true);
    let prefix = dir.path().join("snap");
    snapshot::write_snapshot(&f, &prefix, Some(0.5)).unwrap();
    let (desc, g) = snapshot::read_snapshot(&prefix).unwrap();
    assert_eq!(desc.time, Some(0.5));
    assert_eq!(desc.mode_count, 27);
    assert_eq!(g.coeffs(), f.coeffs());
    let bytes = std::fs::read(prefix.with_extension("bin")).unwrap();
    assert_eq!(bytes.len(), 27 * 16);
    assert_eq!(&bytes[..8], &f.coeffs()[0].re.to_le_bytes());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_holds_for_random_fields(seed in any::<u64>(), n in 2usize..7, q in 2usize..4, ball in any::<bool>()) {
        let spec = if ball { DomainSpec::ball(4 * n) } else { DomainSpec::cube(n) }.with_oversampling(q);
        let b = EigenBasis::new(spec).unwrap();
        let f = random_field(&b, &mut stream(seed, &[]), |_| true).scaled(c(3.0));
        let quad = b.synthesize(&f).unwrap().l2_sq();
        prop_assert!((quad - f.norm_sq()).abs() < 1e-10 * f.norm_sq());
    }

    #[test]
    fn roundtrip_is_identity(seed in any::<u64>(), n in 2usize..6) {
        let b = EigenBasis::new(DomainSpec::cube(n)).unwrap();
        let f = random_field(&b, &mut stream(seed, &[1]), |_| true);
        let back = b.analyze(&b.synthesize(&f).unwrap()).unwrap();
        prop_assert!(back.axpy(c(-1.0), &f).unwrap().norm() < 1e-10);
    }
}
