//! Estimate harness: band-pair samples, bilinear space-time integrals, the
//! boundary functional `H_k`, `Γ`, L⁴ and L²L^∞ norms, the trace lemma, and
//! dyadic scaling studies producing [`EstimateReport`]s.
//!
//! Every estimate is evaluated with constant 1 on its right-hand side; the
//! reported ratios are the measured implicit constants.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{cube_norm, DomainKind, EigenBasis, Grid, Sampler, SpectralField};
use crate::error::{Error, Result};
use crate::flow::linear_evolve;
use crate::quadrature::{composite_nodes, ls_slope, GaussLegendre, Simpson};
use crate::rng::{band_field, derive_seed, stream};

/// Default Simpson node count for time integrals.
pub const SIMPSON_NODES: usize = 65;

const PAIR_TAG: u64 = 0xB1;
const SINGLE_TAG: u64 = 0x51;

/// Identifier of a measured estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateId {
    /// `∫₀^T‖v_k∇u_j‖² ≤ C 2^{2k}(‖v_k‖²H₀(u_j) + ‖u_j‖²H₂(v_k))`.
    GradBilinear,
    /// `∫₀^T ‖u_jv_k‖² + 2^{−2j}‖v_k∇u_j‖² ≤ C 2^{2k−j}‖u_j‖²‖v_k‖²` for `T = 2^{−j}/2`.
    Semiclassical,
    /// Same left side `≤ C T 2^{2k}‖u_j‖²‖v_k‖²` for any `T`.
    GlobalTime,
    /// Global-time rows evaluated at the semiclassical horizon (companion rows).
    GlobalTimeShort,
    /// `∫₀^T‖w_m‖⁴₄ ≤ C T 2^{2m}‖w_m‖⁴₂`.
    L4,
    /// `‖w_m‖_{L²_TL^∞} ≤ C √T m² 2^m ‖w_m‖₂` (grid maximum, best effort).
    L2Linf,
    /// `∫₀^T∫_{∂Ω}|∂_nw_j|² ≤ C(2^{−j}‖w_j‖²_{Ḣ¹} + ‖w_j‖‖w_j‖_{Ḣ¹})` for `T = 2^{−j}`.
    BoundaryTrace,
    /// `|φ(x₀)|² ≤ C(λ^{−1}∫_{C}|Δφ|² + λ³∫_{C}|φ|²)` on the cube of side `1/λ`.
    TraceLemma,
}

impl EstimateId {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateId::GradBilinear => "grad_bilinear",
            EstimateId::Semiclassical => "semiclassical",
            EstimateId::GlobalTime => "global_time",
            EstimateId::GlobalTimeShort => "global_time_short",
            EstimateId::L4 => "l4",
            EstimateId::L2Linf => "l2linf",
            EstimateId::BoundaryTrace => "boundary_trace",
            EstimateId::TraceLemma => "trace_lemma",
        }
    }

    fn is_pair(&self) -> bool {
        matches!(
            self,
            EstimateId::GradBilinear | EstimateId::Semiclassical | EstimateId::GlobalTime | EstimateId::GlobalTimeShort
        )
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unit-L² random fields on the plateaus of bands `j` and `k ≤ j`.
#[derive(Debug, Clone)]
pub struct BandPairSample {
    pub j: u32,
    pub k: u32,
    pub trial: u32,
    /// Per-sample seed derived from the master seed and `(j, k, trial)`.
    pub seed: u64,
    pub u: SpectralField,
    pub v: SpectralField,
}

impl BandPairSample {
    pub fn draw(basis: &Arc<EigenBasis>, j: u32, k: u32, trial: u32, seed: u64) -> Result<Self> {
        if k > j {
            return Err(Error::InvalidArgument(format!("band pair needs k <= j, got j={j}, k={k}")));
        }
        let tags = [PAIR_TAG, j as u64, k as u64, trial as u64];
        let sample_seed = derive_seed(seed, &tags);
        let u = band_field(basis, j, &mut stream(sample_seed, &[0]));
        let v = band_field(basis, k, &mut stream(sample_seed, &[1]));
        for (band, f) in [(j, &u), (k, &v)] {
            if f.norm() == 0.0 {
                return Err(empty_band(basis, band));
            }
        }
        Ok(Self {
            j,
            k,
            trial,
            seed: sample_seed,
            u,
            v,
        })
    }
}

fn empty_band(basis: &EigenBasis, band: u32) -> Error {
    Error::Degenerate(format!(
        "band {band} has no plateau modes in a {} basis with N={}",
        basis.kind(),
        basis.spec().n_max
    ))
}

/// A unit-L² random field on the plateau of band `m` for single-band estimates.
pub fn band_sample(basis: &Arc<EigenBasis>, m: u32, trial: u32, seed: u64) -> Result<(u64, SpectralField)> {
    let sample_seed = derive_seed(seed, &[SINGLE_TAG, m as u64, trial as u64]);
    let f = band_field(basis, m, &mut stream(sample_seed, &[0]));
    if f.norm() == 0.0 {
        return Err(empty_band(basis, m));
    }
    Ok((sample_seed, f))
}

/// Smallest integer `≥ min` whose prime factors are all in {2, 3, 5, 7}.
pub fn smooth_size(min: usize) -> usize {
    (min.max(1)..)
        .find(|&n| {
            let mut r = n;
            for p in [2, 3, 5, 7] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("smooth numbers are unbounded")
}

/// A sampler whose grid integrates products of fields with combined per-axis
/// extent `extent` without aliasing (cube: interior trapezoid with
/// `G + 1 > extent`; ball: Gauss-Legendre radial rule).
pub fn product_sampler(kind: DomainKind, extent: usize) -> Sampler {
    let grid = match kind {
        DomainKind::Cube => Grid::cube(smooth_size(extent + 1) - 1),
        DomainKind::RadialBall => Grid::radial_gauss(4 * extent + 32),
    };
    Sampler::new(&grid)
}

fn extent(f: &SpectralField) -> usize {
    f.active_extent().max(1)
}

/// Space-time integrals `A = ∫₀^T‖uv‖²` and `B = ∫₀^T‖v∇u‖²` along the linear flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BilinearIntegrals {
    pub a: f64,
    pub b: f64,
}

/// Simpson-in-time integrals of `‖u(t)v(t)‖²` and `‖v(t)∇u(t)‖²` on a product grid.
pub fn bilinear_lhs(u: &SpectralField, v: &SpectralField, t_end: f64, nodes: usize) -> Result<BilinearIntegrals> {
    same_basis(u, v)?;
    let rule = Simpson::new(t_end, nodes)?;
    let sampler = product_sampler(u.basis().kind(), extent(u) + extent(v));
    let grid = sampler.grid().clone();
    let mut a = 0.0;
    let mut b = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (ut, vt) = (linear_evolve(u, t), linear_evolve(v, t));
        let uv = sampler.values(&ut)?;
        let vv = sampler.values(&vt)?;
        let grad = sampler.gradient(&ut)?;
        let (mut at, mut bt) = (0.0, 0.0);
        for i in 0..grid.len() {
            let weight = grid.weight(i);
            let v2 = vv.values()[i].norm_sqr();
            let g2: f64 = grad.iter().map(|g| g.values()[i].norm_sqr()).sum();
            at += weight * uv.values()[i].norm_sqr() * v2;
            bt += weight * v2 * g2;
        }
        a += w * at;
        b += w * bt;
    }
    Ok(BilinearIntegrals { a, b })
}

fn same_basis(u: &SpectralField, v: &SpectralField) -> Result<()> {
    if u.basis().same_layout(v.basis()) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("fields must share a basis".into()))
    }
}

/// `(∫‖∇(uv)‖², ∫‖u∇v‖², ∫‖v∇u‖²)` over `[0, T]`.
pub fn gradient_product_integrals(u: &SpectralField, v: &SpectralField, t_end: f64, nodes: usize) -> Result<[f64; 3]> {
    same_basis(u, v)?;
    let rule = Simpson::new(t_end, nodes)?;
    let sampler = product_sampler(u.basis().kind(), extent(u) + extent(v));
    let grid = sampler.grid().clone();
    let mut out = [0.0; 3];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (ut, vt) = (linear_evolve(u, t), linear_evolve(v, t));
        let (uv, vv) = (sampler.values(&ut)?, sampler.values(&vt)?);
        let (gu, gv) = (sampler.gradient(&ut)?, sampler.gradient(&vt)?);
        for i in 0..grid.len() {
            let weight = grid.weight(i) * w;
            let (a, b) = (uv.values()[i], vv.values()[i]);
            for c in 0..gu.len() {
                let (da, db) = (gu[c].values()[i], gv[c].values()[i]);
                out[0] += weight * (a * db + b * da).norm_sqr();
                out[1] += weight * (a * db).norm_sqr();
                out[2] += weight * (b * da).norm_sqr();
            }
        }
    }
    Ok(out)
}

/// `H_k(w) = ‖w(0)‖‖w(0)‖_{Ḣ¹} + ∫₀^T∫_{∂Ω} Σ_{l ≤ k} 2^{−2lm}|∂_nΔ^l w|²` for a band-`m` field.
pub fn boundary_functional(w: &SpectralField, t_end: f64, order: u32, m: u32, nodes: usize) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("H_k is defined for k <= 2, got {order}")));
    }
    let base = w.norm() * w.dirichlet_form().sqrt();
    if t_end == 0.0 {
        return Ok(base);
    }
    let rule = Simpson::new(t_end, nodes)?;
    let basis = w.basis();
    let integral = rule.integrate(|t| {
        (0..=order)
            .map(|l| {
                let scale = (-2.0 * (l * m) as f64).exp2();
                let wl = w.map_eigen(|lam| Complex64::from_polar((-lam).powi(l as i32), -lam * t));
                scale * basis.boundary_flux_energy(&wl)
            })
            .sum()
    });
    Ok(base + integral)
}

/// `Γ(u_j, v_k) = 2^{−k}H₂(v_k)‖u_j(0)‖² + 2^{−j}H₀(u_j)‖v_k(0)‖²`.
pub fn gamma_functional(u: &SpectralField, v: &SpectralField, j: u32, k: u32, t_end: f64, nodes: usize) -> Result<f64> {
    let h2 = boundary_functional(v, t_end, 2, k, nodes)?;
    let h0 = boundary_functional(u, t_end, 0, j, nodes)?;
    Ok((-(k as f64)).exp2() * h2 * u.norm_sq() + (-(j as f64)).exp2() * h0 * v.norm_sq())
}

/// `∫₀^T ‖w(t)‖⁴₄ dt` on a grid resolving `|w|⁴` exactly.
pub fn l4_norm_integral(w: &SpectralField, t_end: f64, nodes: usize) -> Result<f64> {
    let rule = Simpson::new(t_end, nodes)?;
    let sampler = product_sampler(w.basis().kind(), 2 * extent(w));
    let mut total = 0.0;
    for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let vals = sampler.values(&linear_evolve(w, t))?;
        total += wt * vals.integrate(|z| z.norm_sqr() * z.norm_sqr());
    }
    Ok(total)
}

/// `∫₀^T‖w‖⁴₄ / (T 2^{2m}‖w(0)‖⁴)`; zero for the zero field.
pub fn l4_ratio(w: &SpectralField, t_end: f64, m: u32, nodes: usize) -> Result<f64> {
    let mass = w.norm_sq();
    if mass == 0.0 {
        return Ok(0.0);
    }
    Ok(l4_norm_integral(w, t_end, nodes)? / (t_end * (2.0 * m as f64).exp2() * mass * mass))
}

/// `‖w‖²_{L²_TL^∞}` with the supremum taken over a twice-oversampled grid.
pub fn l2linf_norm_sq(w: &SpectralField, t_end: f64, nodes: usize) -> Result<f64> {
    let rule = Simpson::new(t_end, nodes)?;
    let sampler = product_sampler(w.basis().kind(), 2 * extent(w));
    let mut total = 0.0;
    for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
        total += wt * sampler.values(&linear_evolve(w, t))?.max_abs().powi(2);
    }
    Ok(total)
}

/// `∫₀^T ∫_{∂Ω}|∂_n w(t)|²` with exact face Parseval at each node.
pub fn boundary_flux_integral(w: &SpectralField, t_end: f64, nodes: usize) -> Result<f64> {
    let rule = Simpson::new(t_end, nodes)?;
    let basis = w.basis();
    Ok(rule.integrate(|t| basis.boundary_flux_energy(&linear_evolve(w, t))))
}

/// Surface flux over `T = 2^{−j}` against `2^{−j}‖w‖²_{Ḣ¹} + ‖w‖‖w‖_{Ḣ¹}`.
pub fn boundary_trace_scaling(w: &SpectralField, j: u32, nodes: usize) -> Result<(f64, f64, f64)> {
    let t = (-(j as f64)).exp2();
    let lhs = boundary_flux_integral(w, t, nodes)?;
    let h1 = w.dirichlet_form().sqrt();
    let rhs = t * h1 * h1 + w.norm() * h1;
    Ok((lhs, rhs, ratio(lhs, rhs)))
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Something whose value and Laplacian can be sampled on tensor grids.
pub trait TraceProbe {
    /// Values and Laplacians on `xs × ys × zs` (x-major layout).
    fn tensor_samples(&self, axes: [&[f64]; 3]) -> Result<(Vec<Complex64>, Vec<Complex64>)>;
    /// Largest spatial frequency present (sets the quadrature resolution).
    fn max_frequency(&self) -> f64;
}

/// The constant function `c` (not in the Dirichlet basis): `Δc = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProbe(pub Complex64);

impl TraceProbe for ConstantProbe {
    fn tensor_samples(&self, axes: [&[f64]; 3]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let len = axes.iter().map(|a| a.len()).product();
        Ok((vec![self.0; len], vec![Complex64::new(0.0, 0.0); len]))
    }
    fn max_frequency(&self) -> f64 {
        0.0
    }
}

impl TraceProbe for SpectralField {
    fn tensor_samples(&self, axes: [&[f64]; 3]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        if self.basis().kind() != DomainKind::Cube {
            return Err(Error::Unsupported("tensor sampling is implemented on the cube".into()));
        }
        let n = extent(self);
        let dense = self.to_dense(n);
        let lap: Vec<Complex64> = {
            let mut out = dense.clone();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let lam = ((a + 1).pow(2) + (b + 1).pow(2) + (c + 1).pow(2)) as f64;
                        out[(a * n + b) * n + c] *= -lam;
                    }
                }
            }
            out
        };
        Ok((tensor_contract(&dense, n, axes), tensor_contract(&lap, n, axes)))
    }

    fn max_frequency(&self) -> f64 {
        self.active_max_eigenvalue().sqrt()
    }
}

/// `Σ_{abc} D_{abc} e_{abc}(x_p, y_q, z_r)` by successive contraction over each axis.
fn tensor_contract(dense: &[Complex64], n: usize, axes: [&[f64]; 3]) -> Vec<Complex64> {
    let table = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .flat_map(|&x| (1..=n).map(move |a| (a as f64 * x).sin()))
            .collect()
    };
    let [sx, sy, sz] = [table(axes[0]), table(axes[1]), table(axes[2])];
    let (px, py, pz) = (axes[0].len(), axes[1].len(), axes[2].len());
    let zero = Complex64::new(0.0, 0.0);
    // [a][b][r]
    let mut t1 = vec![zero; n * n * pz];
    for ab in 0..n * n {
        let row = &dense[ab * n..(ab + 1) * n];
        for r in 0..pz {
            let s = &sz[r * n..(r + 1) * n];
            t1[ab * pz + r] = row.iter().zip(s).map(|(d, w)| d * w).sum();
        }
    }
    // [a][q][r]
    let mut t2 = vec![zero; n * py * pz];
    for a in 0..n {
        for q in 0..py {
            let s = &sy[q * n..(q + 1) * n];
            for r in 0..pz {
                t2[(a * py + q) * pz + r] = (0..n).map(|b| t1[(a * n + b) * pz + r] * s[b]).sum();
            }
        }
    }
    // [p][q][r]
    let norm = cube_norm();
    let mut out = vec![zero; px * py * pz];
    for p in 0..px {
        let s = &sx[p * n..(p + 1) * n];
        for qr in 0..py * pz {
            out[p * py * pz + qr] = (0..n).map(|a| t2[a * py * pz + qr] * s[a]).sum::<Complex64>() * norm;
        }
    }
    out
}

/// One trace-lemma evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceCheck {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `|φ(x₀)|²` against `λ^{−1}∫_C|Δφ|² + λ³∫_C|φ|²` on the cube `C` of side
/// `1/λ` centred at `x₀`, by tensor Gauss-Legendre quadrature.
pub fn trace_lemma_check(phi: &dyn TraceProbe, lambda: f64, center: [f64; 3]) -> Result<TraceCheck> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let half = 0.5 / lambda;
    if center.iter().any(|&c| c - half < 0.0 || c + half > PI) {
        return Err(Error::InvalidDomain(format!(
            "cube of side {} around {center:?} leaves the domain",
            1.0 / lambda
        )));
    }
    let rule = GaussLegendre::new(16);
    let panel = (3.0 / phi.max_frequency().max(1e-300)).min(2.0 * half);
    let axis_nodes: Vec<Vec<(f64, f64)>> = center
        .iter()
        .map(|&c| composite_nodes(c - half, c + half, &[], panel, &rule))
        .collect();
    let xs: Vec<Vec<f64>> = axis_nodes.iter().map(|a| a.iter().map(|p| p.0).collect()).collect();
    let (vals, laps) = phi.tensor_samples([&xs[0], &xs[1], &xs[2]])?;
    let (mut mass, mut lap_mass) = (0.0, 0.0);
    let (ny, nz) = (xs[1].len(), xs[2].len());
    for (p, &(_, wx)) in axis_nodes[0].iter().enumerate() {
        for (q, &(_, wy)) in axis_nodes[1].iter().enumerate() {
            for (r, &(_, wz)) in axis_nodes[2].iter().enumerate() {
                let i = (p * ny + q) * nz + r;
                let w = wx * wy * wz;
                mass += w * vals[i].norm_sqr();
                lap_mass += w * laps[i].norm_sqr();
            }
        }
    }
    let (centre_val, _) = phi.tensor_samples([&[center[0]], &[center[1]], &[center[2]]])?;
    let lhs = centre_val[0].norm_sqr();
    let rhs = lap_mass / lambda + lambda.powi(3) * mass;
    Ok(TraceCheck {
        lambda,
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
    })
}

/// One CSV row of an estimate report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateRow {
    pub estimate: EstimateId,
    pub j: u32,
    pub k: u32,
    pub trial: u32,
    pub seed: u64,
    /// Time horizon; for trace-lemma rows this column holds `λ`.
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Regression summary of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub estimate: EstimateId,
    pub domain: DomainKind,
    pub rows: usize,
    pub max_ratio: f64,
    /// Slope of `log₂(max ratio over k and trials)` against `j`.
    pub slope_j: Option<f64>,
    /// Slope of `log₂(max ratio over j and trials)` against `k`.
    pub slope_k: Option<f64>,
    /// For each fixed `k`, slope of `log₂(max ratio over trials)` against `j`.
    pub slope_j_by_k: BTreeMap<u32, f64>,
    pub all_positive_finite: bool,
}

/// Rows of one estimate plus their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: EstimateId,
    pub domain: DomainKind,
    pub rows: Vec<EstimateRow>,
}

pub const CSV_HEADER: [&str; 9] = ["estimate", "j", "k", "trial", "seed", "T", "lhs", "rhs", "ratio"];

fn max_by_key<F: Fn(&EstimateRow) -> u32>(rows: &[EstimateRow], key: F) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    for r in rows {
        let e = out.entry(key(r)).or_insert(f64::NEG_INFINITY);
        *e = f64::max(*e, r.ratio);
    }
    out
}

fn log_slope(points: &BTreeMap<u32, f64>) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, &r)| r > 0.0 && r.is_finite())
        .map(|(&x, &r)| (x as f64, r.log2()))
        .unzip();
    ls_slope(&xs, &ys)
}

impl EstimateReport {
    pub fn summary(&self) -> ReportSummary {
        let rows = &self.rows;
        let mut slope_j_by_k = BTreeMap::new();
        let ks: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.k).collect();
        for k in ks {
            let sub: Vec<EstimateRow> = rows.iter().filter(|r| r.k == k).copied().collect();
            if let Some(s) = log_slope(&max_by_key(&sub, |r| r.j)) {
                slope_j_by_k.insert(k, s);
            }
        }
        ReportSummary {
            estimate: self.estimate,
            domain: self.domain,
            rows: rows.len(),
            max_ratio: rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max),
            slope_j: log_slope(&max_by_key(rows, |r| r.j)),
            slope_k: log_slope(&max_by_key(rows, |r| r.k)),
            slope_j_by_k,
            all_positive_finite: rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0),
        }
    }

    /// CSV with header `estimate,j,k,trial,seed,T,lhs,rhs,ratio`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.estimate.to_string(),
                r.j.to_string(),
                r.k.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.t.to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.ratio.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

fn default_k_range() -> [u32; 2] {
    [1, u32::MAX]
}

fn default_horizon() -> f64 {
    1.0
}

fn default_nodes() -> usize {
    SIMPSON_NODES
}

/// Parameters of a dyadic scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub estimates: Vec<EstimateId>,
    /// Inclusive range of the high band `j` (or `m` for single-band estimates).
    pub j_range: [u32; 2],
    /// Inclusive range of the low band `k`; pairs keep `k ≤ j`.
    #[serde(default = "default_k_range")]
    pub k_range: [u32; 2],
    pub trials: u32,
    pub seed: u64,
    /// Horizon `T` for the global-time, gradient and L⁴ estimates.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_nodes")]
    pub simpson_nodes: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.estimates.is_empty() {
            return Err(Error::InvalidArgument("no estimates requested".into()));
        }
        if self.j_range[0] > self.j_range[1] || self.k_range[0] > self.k_range[1] || self.trials == 0 {
            return Err(Error::InvalidArgument("empty dyadic range or zero trials".into()));
        }
        if self.estimates.contains(&EstimateId::TraceLemma) {
            return Err(Error::InvalidArgument("trace-lemma rows come from trace_sweep".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid horizon {}", self.horizon)));
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for j in self.j_range[0]..=self.j_range[1] {
            for k in self.k_range[0]..=self.k_range[1].min(j) {
                out.push((j, k));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Task {
    Pair { j: u32, k: u32, trial: u32 },
    Single { m: u32, trial: u32 },
}

fn pair_rows(basis: &Arc<EigenBasis>, cfg: &StudyConfig, j: u32, k: u32, trial: u32) -> Result<Vec<EstimateRow>> {
    let s = BandPairSample::draw(basis, j, k, trial, cfg.seed)?;
    let want = |e: EstimateId| cfg.estimates.contains(&e);
    let norms = s.u.norm_sq() * s.v.norm_sq();
    let row = |estimate, t, lhs: f64, rhs: f64| EstimateRow {
        estimate,
        j,
        k,
        trial,
        seed: s.seed,
        t,
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
    };
    let semiclassical_weight = (-2.0 * j as f64).exp2();
    let mut rows = Vec::new();
    if want(EstimateId::GlobalTime) || want(EstimateId::GradBilinear) {
        let t = cfg.horizon;
        let lhs = bilinear_lhs(&s.u, &s.v, t, cfg.simpson_nodes)?;
        if want(EstimateId::GlobalTime) {
            let rhs = t * (2.0 * k as f64).exp2() * norms;
            rows.push(row(EstimateId::GlobalTime, t, lhs.a + semiclassical_weight * lhs.b, rhs));
        }
        if want(EstimateId::GradBilinear) {
            let h0 = boundary_functional(&s.u, t, 0, j, cfg.simpson_nodes)?;
            let h2 = boundary_functional(&s.v, t, 2, k, cfg.simpson_nodes)?;
            let rhs = (2.0 * k as f64).exp2() * (s.v.norm_sq() * h0 + s.u.norm_sq() * h2);
            rows.push(row(EstimateId::GradBilinear, t, lhs.b, rhs));
        }
    }
    if want(EstimateId::Semiclassical) {
        let t = 0.5 * (-(j as f64)).exp2();
        let lhs = bilinear_lhs(&s.u, &s.v, t, cfg.simpson_nodes)?;
        let value = lhs.a + semiclassical_weight * lhs.b;
        rows.push(row(
            EstimateId::Semiclassical,
            t,
            value,
            (2.0 * k as f64 - j as f64).exp2() * norms,
        ));
        rows.push(row(EstimateId::GlobalTimeShort, t, value, t * (2.0 * k as f64).exp2() * norms));
    }
    Ok(rows)
}

fn single_rows(basis: &Arc<EigenBasis>, cfg: &StudyConfig, m: u32, trial: u32) -> Result<Vec<EstimateRow>> {
    let (seed, w) = band_sample(basis, m, trial, cfg.seed)?;
    let row = |estimate, t, lhs: f64, rhs: f64| EstimateRow {
        estimate,
        j: m,
        k: m,
        trial,
        seed,
        t,
        lhs,
        rhs,
        ratio: ratio(lhs, rhs),
    };
    let mass = w.norm_sq();
    let t = cfg.horizon;
    let mut rows = Vec::new();
    for &e in &cfg.estimates {
        match e {
            EstimateId::L4 => {
                let lhs = l4_norm_integral(&w, t, cfg.simpson_nodes)?;
                rows.push(row(e, t, lhs, t * (2.0 * m as f64).exp2() * mass * mass));
            }
            EstimateId::L2Linf => {
                let lhs = l2linf_norm_sq(&w, t, cfg.simpson_nodes)?.sqrt();
                let mf = m.max(1) as f64;
                rows.push(row(e, t, lhs, t.sqrt() * mf * mf * (m as f64).exp2() * mass.sqrt()));
            }
            EstimateId::BoundaryTrace => {
                let (lhs, rhs, _) = boundary_trace_scaling(&w, m, cfg.simpson_nodes)?;
                rows.push(row(e, (-(m as f64)).exp2(), lhs, rhs));
            }
            _ => {}
        }
    }
    Ok(rows)
}

/// Run every requested estimate over the dyadic ranges. Trials run in parallel;
/// rows are ordered by `(estimate, j, k, trial)` independent of scheduling.
pub fn scaling_study(basis: &Arc<EigenBasis>, cfg: &StudyConfig) -> Result<Vec<EstimateReport>> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    if cfg.estimates.iter().any(|e| e.is_pair()) {
        for (j, k) in cfg.pairs() {
            tasks.extend((0..cfg.trials).map(|trial| Task::Pair { j, k, trial }));
        }
    }
    if cfg.estimates.iter().any(|e| !e.is_pair()) {
        for m in cfg.j_range[0]..=cfg.j_range[1] {
            tasks.extend((0..cfg.trials).map(|trial| Task::Single { m, trial }));
        }
    }
    let rows: Vec<Vec<EstimateRow>> = tasks
        .par_iter()
        .map(|task| match *task {
            Task::Pair { j, k, trial } => pair_rows(basis, cfg, j, k, trial),
            Task::Single { m, trial } => single_rows(basis, cfg, m, trial),
        })
        .collect::<Result<_>>()?;
    let mut grouped: BTreeMap<EstimateId, Vec<EstimateRow>> = BTreeMap::new();
    for r in rows.into_iter().flatten() {
        grouped.entry(r.estimate).or_default().push(r);
    }
    Ok(grouped
        .into_iter()
        .map(|(estimate, mut rows)| {
            rows.sort_by_key(|r| (r.j, r.k, r.trial));
            EstimateReport {
                estimate,
                domain: basis.kind(),
                rows,
            }
        })
        .collect())
}

/// Trace-lemma sweep: for each band `m`, `λ = 2^{m−1}`, centre `(π/2)³`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSweep {
    pub lambdas: Vec<f64>,
    /// Worst ratio over trials for each `λ`.
    pub per_lambda_max: Vec<f64>,
    /// `max / min` of the per-`λ` constants.
    pub spread: f64,
    #[serde(skip)]
    pub report: EstimateReport,
}

pub fn trace_sweep(basis: &Arc<EigenBasis>, bands: &[u32], trials: u32, seed: u64) -> Result<TraceSweep> {
    if bands.is_empty() || trials == 0 {
        return Err(Error::InvalidArgument("empty trace sweep".into()));
    }
    let centre = [PI / 2.0; 3];
    let tasks: Vec<(u32, u32)> = bands
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect();
    let rows: Vec<EstimateRow> = tasks
        .par_iter()
        .map(|&(m, trial)| {
            let (seed, f) = band_sample(basis, m, trial, seed)?;
            let lambda = (m as f64 - 1.0).exp2();
            let c = trace_lemma_check(&f, lambda, centre)?;
            Ok(EstimateRow {
                estimate: EstimateId::TraceLemma,
                j: m,
                k: m,
                trial,
                seed,
                t: lambda,
                lhs: c.lhs,
                rhs: c.rhs,
                ratio: c.ratio,
            })
        })
        .collect::<Result<_>>()?;
    let report = EstimateReport {
        estimate: EstimateId::TraceLemma,
        domain: basis.kind(),
        rows,
    };
    let per_band = max_by_key(&report.rows, |r| r.j);
    let lambdas: Vec<f64> = per_band.keys().map(|&m| (m as f64 - 1.0).exp2()).collect();
    let per_lambda_max: Vec<f64> = per_band.values().copied().collect();
    let hi = per_lambda_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = per_lambda_max.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TraceSweep {
        lambdas,
        per_lambda_max,
        spread: hi / lo,
        report,
    })
}
