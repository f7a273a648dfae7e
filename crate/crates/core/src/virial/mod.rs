//! Bilinear virial machinery: the dyadic weight `ρ_{ω,k}`, the interaction
//! functional `I_ρ(u,v) = ∫∫ρ(x−y)|u|²(x)|v|²(y)`, its momentum formula for
//! `∂_t I`, and the second-derivative identity with boundary flux terms.
//!
//! Every weight depends on `ω·(x−y)` only, so each functional reduces to a
//! double integral over one-dimensional marginals along `ω`. For coordinate
//! directions the marginals are exact trigonometric polynomials built from a
//! Gram matrix of the coefficients; other directions use cloud-in-cell line
//! projections of grid samples.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{DomainKind, EigenBasis, PhysicalField, SpectralField};
use crate::error::{Error, Result};
use crate::flow::linear_evolve;
use crate::quadrature::{composite_nodes, ls_slope, GaussLegendre};
use crate::rng::{complex_gaussian, stream};

const DIRECTION_TAG: u64 = 0x0D1E;
const GL_ORDER: usize = 24;

/// A weight `ρ(z) = φ(ω·z)` with an even profile `φ`.
pub trait LineWeight: Sync {
    fn direction(&self) -> [f64; 3];
    fn profile(&self, s: f64) -> f64;
    /// `φ'(s)`, i.e. `ω·∇ρ`.
    fn slope(&self, s: f64) -> f64;
    /// `φ''(s)` almost everywhere; the Hessian is `φ''·ω⊗ω`.
    fn curvature(&self, s: f64) -> f64;
    /// Points where `φ''` jumps.
    fn seams(&self) -> Vec<f64>;
}

/// `ρ_{ω,k}(z) = |ω·z|` for `|ω·z| > 2^{−k}`, else `2^k|ω·z|²/2 + 2^{−k}/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalWeight {
    direction: [f64; 3],
    k: i32,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl DirectionalWeight {
    pub fn new(direction: [f64; 3], k: i32) -> Result<Self> {
        let norm = dot(direction, direction).sqrt();
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "direction must be a unit vector, |ω| = {norm}"
            )));
        }
        Ok(Self { direction, k })
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    /// Slab half-width `2^{−k}`.
    pub fn width(&self) -> f64 {
        (-self.k as f64).exp2()
    }

    pub fn eval(&self, z: [f64; 3]) -> f64 {
        self.profile(dot(self.direction, z))
    }

    /// `ω·∇ρ(z)`.
    pub fn grad(&self, z: [f64; 3]) -> f64 {
        self.slope(dot(self.direction, z))
    }
}

impl LineWeight for DirectionalWeight {
    fn direction(&self) -> [f64; 3] {
        self.direction
    }

    fn profile(&self, s: f64) -> f64 {
        let d = self.width();
        if s.abs() > d {
            s.abs()
        } else {
            0.5 * s * s / d + 0.5 * d
        }
    }

    fn slope(&self, s: f64) -> f64 {
        let d = self.width();
        if s.abs() > d {
            s.signum()
        } else {
            s / d
        }
    }

    fn curvature(&self, s: f64) -> f64 {
        let d = self.width();
        if s.abs() < d {
            1.0 / d
        } else {
            0.0
        }
    }

    fn seams(&self) -> Vec<f64> {
        let d = self.width();
        vec![-d, d]
    }
}

/// A constant weight: `I = c‖u‖²‖v‖²` and all derivatives vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWeight {
    pub direction: [f64; 3],
    pub value: f64,
}

impl LineWeight for ConstantWeight {
    fn direction(&self) -> [f64; 3] {
        self.direction
    }
    fn profile(&self, _: f64) -> f64 {
        self.value
    }
    fn slope(&self, _: f64) -> f64 {
        0.0
    }
    fn curvature(&self, _: f64) -> f64 {
        0.0
    }
    fn seams(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// The three coordinate axes followed by `extra` seeded pseudo-random unit vectors.
pub fn direction_set(seed: u64, extra: usize) -> Vec<[f64; 3]> {
    let mut out = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut rng = stream(seed, &[DIRECTION_TAG]);
    while out.len() < 3 + extra {
        let a = complex_gaussian(&mut rng);
        let b = complex_gaussian(&mut rng);
        let v = [a.re, a.im, b.re];
        let n = dot(v, v).sqrt();
        if n > 1e-3 {
            out.push([v[0] / n, v[1] / n, v[2] / n]);
        }
    }
    out
}

/// Coordinate axis matching `±ω`, if any.
fn axis_of(direction: [f64; 3]) -> Option<usize> {
    (0..3).find(|&i| direction[i].abs() == 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Component {
    /// `|f|²`
    Mass,
    /// `Im(f̄ ω·∇f)`
    Momentum,
    /// `Re(f̄ ω·∇f)`
    Stress,
    /// `|ω·∇f|²`
    Dirichlet,
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Profile,
    Slope,
    Curvature,
}

fn kernel_value(w: &dyn LineWeight, kernel: Kernel, s: f64) -> f64 {
    match kernel {
        Kernel::Profile => w.profile(s),
        Kernel::Slope => w.slope(s),
        Kernel::Curvature => w.curvature(s),
    }
}

/// `Σ_m cos_m cos(mx) + sin_m sin(mx)`.
#[derive(Debug, Clone, Default)]
struct RealSeries {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RealSeries {
    fn zeros(len: usize) -> Self {
        Self {
            cos: vec![0.0; len],
            sin: vec![0.0; len],
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let step = Complex64::from_polar(1.0, x);
        let mut z = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (c, s) in self.cos.iter().zip(&self.sin) {
            acc += c * z.re + s * z.im;
            z *= step;
        }
        acc
    }

    fn frequency(&self) -> usize {
        self.cos.len().saturating_sub(1)
    }
}

/// Exact marginals along a coordinate axis of the cube.
#[derive(Debug, Clone)]
struct AxisMarginals {
    mass: RealSeries,
    momentum: RealSeries,
    stress: RealSeries,
    dirichlet: RealSeries,
    /// Face flux energies `∫|∂_n f|²` on the faces `s = 0` and `s = π`.
    flux: [f64; 2],
}

impl AxisMarginals {
    fn new(f: &SpectralField, axis: usize) -> Self {
        let n = f.active_extent().max(1);
        let dense = f.to_dense(n);
        // M[a][r]: coefficient with index a along `axis`, r enumerating the other two.
        let mut m = vec![Complex64::new(0.0, 0.0); n * n * n];
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    let idx = [i0, i1, i2];
                    let a = idx[axis];
                    let (p, q) = crate::basis::face_axes(axis);
                    let r = idx[p] * n + idx[q];
                    m[a * n * n + r] = dense[(i0 * n + i1) * n + i2];
                }
            }
        }
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in a..n {
                let ra = &m[a * n * n..(a + 1) * n * n];
                let rb = &m[b * n * n..(b + 1) * n * n];
                let g: Complex64 = ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum();
                gram[a * n + b] = g;
                gram[b * n + a] = g.conj();
            }
        }
        let len = 2 * n + 1;
        let mut mass = RealSeries::zeros(len);
        let mut momentum = RealSeries::zeros(len);
        let mut stress = RealSeries::zeros(len);
        let mut dirichlet = RealSeries::zeros(len);
        let inv_pi = 1.0 / PI;
        for a in 1..=n {
            for b in 1..=n {
                let g = gram[(a - 1) * n + (b - 1)] * inv_pi;
                let (af, bf) = (a as f64, b as f64);
                let diff = a.abs_diff(b);
                mass.cos[diff] += g.re;
                mass.cos[a + b] -= g.re;
                dirichlet.cos[diff] += g.re * af * bf;
                dirichlet.cos[a + b] += g.re * af * bf;
                // f̄ ∂f marginal: G_ab · a · cos(a s) sin(b s).
                let sign = (b as i64 - a as i64).signum() as f64;
                stress.sin[a + b] += g.re * af;
                stress.sin[diff] += sign * g.re * af;
                momentum.sin[a + b] += g.im * af;
                momentum.sin[diff] += sign * g.im * af;
            }
        }
        let flux = [dirichlet.eval(0.0), dirichlet.eval(PI)];
        Self {
            mass,
            momentum,
            stress,
            dirichlet,
            flux,
        }
    }

    fn series(&self, c: Component) -> &RealSeries {
        match c {
            Component::Mass => &self.mass,
            Component::Momentum => &self.momentum,
            Component::Stress => &self.stress,
            Component::Dirichlet => &self.dirichlet,
        }
    }

    fn total_mass(&self) -> f64 {
        self.mass.cos[0] * PI
    }
}

/// Binned projected densities along `ω` (cloud-in-cell deposit of grid samples).
#[derive(Debug, Clone)]
pub struct LineProjection {
    direction: [f64; 3],
    origin: f64,
    width: f64,
    /// Sample spacing of the underlying grid (kernel smoothing scale).
    smoothing: f64,
    mass: Vec<f64>,
    momentum: Vec<f64>,
    stress: Vec<f64>,
    dirichlet: Vec<f64>,
    /// Signed boundary flux `(n·ω)|∂_n f|² dS` collected per node (not a density).
    boundary: Vec<f64>,
}

impl LineProjection {
    /// Projection with the default node count `4·G` scaled by the extent of `ω·Ω`.
    pub fn new(f: &SpectralField, direction: [f64; 3]) -> Result<Self> {
        let g = f.basis().grid().size();
        let (lo, hi) = Self::range(direction);
        let nodes = ((4 * g) as f64 * (hi - lo) / PI).ceil().max(1.0) as usize;
        Self::with_nodes(f, direction, nodes)
    }

    /// Projection onto `bins + 1` equispaced nodes spanning `ω·Ω`.
    pub fn with_nodes(f: &SpectralField, direction: [f64; 3], bins: usize) -> Result<Self> {
        let basis = f.basis();
        if basis.kind() != DomainKind::Cube {
            return Err(Error::Unsupported("line projections are implemented on the cube".into()));
        }
        DirectionalWeight::new(direction, 0)?;
        let (lo, hi) = Self::range(direction);
        let width = (hi - lo) / bins as f64;
        let values = basis.synthesize(f)?;
        let grad = basis.gradient(f)?;
        let grid = basis.grid();
        let cell = grid.weight(0);
        let nodes = bins + 1;
        let mut out = Self {
            direction,
            origin: lo,
            width,
            smoothing: grid.spacing(),
            mass: vec![0.0; nodes],
            momentum: vec![0.0; nodes],
            stress: vec![0.0; nodes],
            dirichlet: vec![0.0; nodes],
            boundary: vec![0.0; nodes],
        };
        for (i, &u) in values.values().iter().enumerate() {
            let du: Complex64 = (0..3).map(|c| grad[c].values()[i] * direction[c]).sum();
            let a = u.conj() * du;
            let s = dot(direction, grid.point(i));
            let (node, frac) = out.locate(s);
            for (arr, val) in [
                (&mut out.mass, u.norm_sqr()),
                (&mut out.momentum, a.im),
                (&mut out.stress, a.re),
                (&mut out.dirichlet, du.norm_sqr()),
            ] {
                deposit(arr, node, frac, val * cell / width);
            }
        }
        for sample in basis.normal_trace(f)?.samples() {
            let s = dot(direction, sample.position);
            let (node, frac) = out.locate(s);
            let val = sample.value.norm_sqr() * dot(sample.normal, direction) * sample.weight;
            deposit(&mut out.boundary, node, frac, val);
        }
        Ok(out)
    }

    fn range(direction: [f64; 3]) -> (f64, f64) {
        let lo: f64 = direction.iter().map(|w| (w * PI).min(0.0)).sum();
        let hi: f64 = direction.iter().map(|w| (w * PI).max(0.0)).sum();
        (lo, hi)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let t = ((s - self.origin) / self.width).max(0.0);
        let last = self.mass.len() - 1;
        let node = (t.floor() as usize).min(last.saturating_sub(1));
        (node, (t - node as f64).clamp(0.0, 1.0))
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.mass.len())
            .map(|i| self.origin + i as f64 * self.width)
            .collect()
    }

    /// Projected density of `|f|²`.
    pub fn density(&self) -> &[f64] {
        &self.mass
    }

    /// `Σ_i P(s_i)·h`, equal to `‖f‖²` up to grid quadrature.
    pub fn mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() * self.width
    }

    fn array(&self, c: Component) -> &[f64] {
        match c {
            Component::Mass => &self.mass,
            Component::Momentum => &self.momentum,
            Component::Stress => &self.stress,
            Component::Dirichlet => &self.dirichlet,
        }
    }
}

fn deposit(arr: &mut [f64], node: usize, frac: f64, val: f64) {
    arr[node] += (1.0 - frac) * val;
    if node + 1 < arr.len() {
        arr[node + 1] += frac * val;
    }
}

/// How the marginals along `ω` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionRoute {
    /// Exact trigonometric marginals for coordinate axes, binned otherwise.
    Auto,
    /// Always use binned line projections.
    Binned,
}

#[derive(Debug, Clone)]
enum Marginals {
    Axis(AxisMarginals),
    Binned(LineProjection),
}

impl Marginals {
    fn new(f: &SpectralField, direction: [f64; 3], route: ProjectionRoute) -> Result<Self> {
        if f.basis().kind() != DomainKind::Cube {
            return Err(Error::Unsupported(
                "virial functionals are implemented on the cube".into(),
            ));
        }
        match (route, axis_of(direction)) {
            (ProjectionRoute::Auto, Some(axis)) => Ok(Marginals::Axis(AxisMarginals::new(f, axis))),
            _ => Ok(Marginals::Binned(LineProjection::new(f, direction)?)),
        }
    }

    fn mass(&self) -> f64 {
        match self {
            Marginals::Axis(a) => a.total_mass(),
            Marginals::Binned(b) => b.mass(),
        }
    }
}

/// Marginals of a pair `(u, v)` along one direction, reused for all functionals.
#[derive(Debug, Clone)]
pub struct PairMarginals {
    direction: [f64; 3],
    u: Marginals,
    v: Marginals,
}

fn exact_pair(
    f: &RealSeries,
    g: &RealSeries,
    w: &dyn LineWeight,
    kernel: Kernel,
) -> f64 {
    let seams = w.seams();
    let freq = f.frequency().max(g.frequency()).max(1) as f64;
    let max_panel = (8.0 / freq).min(0.25);
    let rule = GaussLegendre::new(GL_ORDER);
    let mut outer_breaks = Vec::with_capacity(2 * seams.len());
    for &b in &seams {
        outer_breaks.push(b);
        outer_breaks.push(PI + b);
    }
    let mut total = 0.0;
    for (s, ws) in composite_nodes(0.0, PI, &outer_breaks, max_panel, &rule) {
        let fs = f.eval(s);
        if fs == 0.0 {
            continue;
        }
        total += ws * fs * exact_convolve(g, w, kernel, s, &seams, max_panel, &rule);
    }
    total
}

/// `∫₀^π K(s − s') g(s') ds'`.
fn exact_convolve(
    g: &RealSeries,
    w: &dyn LineWeight,
    kernel: Kernel,
    s: f64,
    seams: &[f64],
    max_panel: f64,
    rule: &GaussLegendre,
) -> f64 {
    let breaks: Vec<f64> = seams.iter().map(|b| s - b).collect();
    composite_nodes(0.0, PI, &breaks, max_panel, rule)
        .into_iter()
        .map(|(t, wt)| wt * kernel_value(w, kernel, s - t) * g.eval(t))
        .sum()
}

/// `∫ K(d − τ) B(τ) dτ` where `B` is the hat of half-width `h` (`order` 1) or
/// the hat convolved with itself (`order` 2): the pair integral of two
/// piecewise-linear densities through their node values.
fn smoothed_kernel(w: &dyn LineWeight, kernel: Kernel, d: f64, h: f64, order: usize, rule: &GaussLegendre) -> f64 {
    let reach = order as f64 * h;
    let mut breaks: Vec<f64> = (-(order as i64)..=order as i64).map(|i| i as f64 * h).collect();
    breaks.extend(w.seams().iter().map(|b| d - b));
    let shape = |tau: f64| {
        let x = (tau / h).abs();
        let v = match order {
            1 => (1.0 - x).max(0.0),
            _ if x <= 1.0 => 2.0 / 3.0 - x * x + 0.5 * x * x * x,
            _ if x <= 2.0 => (2.0 - x).powi(3) / 6.0,
            _ => 0.0,
        };
        v / h
    };
    composite_nodes(-reach, reach, &breaks, reach, rule)
        .into_iter()
        .map(|(tau, wt)| wt * kernel_value(w, kernel, d - tau) * shape(tau))
        .sum()
}

/// Kernel values at node offsets `(i − n + 1)·width`. Continuous kernels are
/// sampled pointwise (the sum is then a trapezoid rule); the discontinuous
/// slab kernel is averaged over the sample spacing.
fn kernel_table(w: &dyn LineWeight, kernel: Kernel, nodes: usize, width: f64, smoothing: f64) -> Vec<f64> {
    let rule = GaussLegendre::new(4);
    (0..2 * nodes - 1)
        .map(|i| {
            let d = (i as f64 - (nodes - 1) as f64) * width;
            match kernel {
                Kernel::Curvature => smoothed_kernel(w, kernel, d, smoothing, 2, &rule),
                _ => kernel_value(w, kernel, d),
            }
        })
        .collect()
}

fn binned_pair(f: &[f64], g: &[f64], table: &[f64], h: f64) -> f64 {
    let n = f.len();
    let mut total = 0.0;
    for (i, &fi) in f.iter().enumerate() {
        if fi == 0.0 {
            continue;
        }
        // table[i − i' + n − 1] = K̄((i − i')h)
        let inner: f64 = g.iter().enumerate().map(|(j, gj)| table[i + n - 1 - j] * gj).sum();
        total += fi * inner;
    }
    total * h * h
}

impl PairMarginals {
    pub fn new(u: &SpectralField, v: &SpectralField, direction: [f64; 3], route: ProjectionRoute) -> Result<Self> {
        if !u.basis().same_layout(v.basis()) {
            return Err(Error::ShapeMismatch("u and v must share a basis".into()));
        }
        DirectionalWeight::new(direction, 0)?;
        Ok(Self {
            direction,
            u: Marginals::new(u, direction, route)?,
            v: Marginals::new(v, direction, route)?,
        })
    }

    /// True when the exact coordinate-axis marginals are in use.
    pub fn is_exact(&self) -> bool {
        matches!(self.u, Marginals::Axis(_))
    }

    pub fn masses(&self) -> (f64, f64) {
        (self.u.mass(), self.v.mass())
    }

    fn check(&self, w: &dyn LineWeight) -> Result<()> {
        if w.direction() != self.direction {
            return Err(Error::InvalidArgument(
                "weight direction differs from the projection direction".into(),
            ));
        }
        Ok(())
    }

    /// `∫∫ K(s − s') a_u(s) b_v(s')`.
    fn pair(&self, w: &dyn LineWeight, kernel: Kernel, a: Component, b: Component) -> f64 {
        match (&self.u, &self.v) {
            (Marginals::Axis(u), Marginals::Axis(v)) => exact_pair(u.series(a), v.series(b), w, kernel),
            (Marginals::Binned(u), Marginals::Binned(v)) => {
                let table = kernel_table(w, kernel, u.mass.len(), u.width, u.smoothing);
                binned_pair(u.array(a), v.array(b), &table, u.width)
            }
            _ => unreachable!("pair marginals share a route"),
        }
    }

    /// `Σ_{s_b} β_f(s_b) ∫ φ'(s_b − s') P_g(s') ds'` with `β` the signed flux
    /// `(n·ω)|∂_n f|²` on the boundary.
    fn boundary(&self, w: &dyn LineWeight, flux_of_u: bool) -> f64 {
        let (f, g) = if flux_of_u { (&self.u, &self.v) } else { (&self.v, &self.u) };
        match (f, g) {
            (Marginals::Axis(f), Marginals::Axis(g)) => {
                let seams = w.seams();
                let freq = g.mass.frequency().max(1) as f64;
                let max_panel = (8.0 / freq).min(0.25);
                let rule = GaussLegendre::new(GL_ORDER);
                let at = |s| exact_convolve(&g.mass, w, Kernel::Slope, s, &seams, max_panel, &rule);
                f.flux[1] * at(PI) - f.flux[0] * at(0.0)
            }
            (Marginals::Binned(f), Marginals::Binned(g)) => {
                let (h, n) = (f.width, f.mass.len());
                let table = kernel_table(w, Kernel::Slope, n, h, f.smoothing);
                let mut total = 0.0;
                for (i, &b) in f.boundary.iter().enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let inner: f64 = g.mass.iter().enumerate().map(|(j, p)| table[i + n - 1 - j] * p).sum();
                    total += b * inner * h;
                }
                total
            }
            _ => unreachable!("pair marginals share a route"),
        }
    }

    /// `I_ρ(u, v)`.
    pub fn interaction(&self, w: &dyn LineWeight) -> Result<f64> {
        self.check(w)?;
        Ok(self.pair(w, Kernel::Profile, Component::Mass, Component::Mass))
    }

    /// `∂_t I = 2∫∫ω·∇ρ(x−y)[Im(ū ω·∇u)(x)|v|²(y) − |u|²(x) Im(v̄ ω·∇v)(y)]`.
    pub fn momentum(&self, w: &dyn LineWeight) -> Result<f64> {
        self.check(w)?;
        let a = self.pair(w, Kernel::Slope, Component::Momentum, Component::Mass);
        let b = self.pair(w, Kernel::Slope, Component::Mass, Component::Momentum);
        Ok(2.0 * (a - b))
    }

    /// Terms of `∂²_t I = 4·S − 2B_u − 2B_v`, where `S` is the Hessian-weighted
    /// integral of `|u(x) ω·∇v̄(y) + v̄(y) ω·∇u(x)|²` and `B` are boundary fluxes.
    pub fn second_derivative(&self, w: &dyn LineWeight) -> Result<SecondDerivativeTerms> {
        self.check(w)?;
        use Component::*;
        let k = Kernel::Curvature;
        let hessian = self.pair(w, k, Dirichlet, Mass)
            + self.pair(w, k, Mass, Dirichlet)
            + 2.0 * self.pair(w, k, Stress, Stress)
            - 2.0 * self.pair(w, k, Momentum, Momentum);
        let boundary_u = self.boundary(w, true);
        let boundary_v = self.boundary(w, false);
        Ok(SecondDerivativeTerms {
            hessian,
            boundary_u,
            boundary_v,
            total: 4.0 * hessian - 2.0 * boundary_u - 2.0 * boundary_v,
        })
    }
}

/// Decomposition of the second time derivative of `I_ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondDerivativeTerms {
    /// `∫∫ φ''(ω·(x−y)) |u(x) ω·∇v̄(y) + v̄(y) ω·∇u(x)|²` (non-negative for convex φ).
    pub hessian: f64,
    /// `∫_{∂Ω}(n·ω)|∂_n u|²(x) ∫ φ'(ω·(x−y))|v|²(y)` (non-negative).
    pub boundary_u: f64,
    pub boundary_v: f64,
    pub total: f64,
}

/// `I_ρ(u, v)`; exact marginals for coordinate directions, binned otherwise.
pub fn interaction_functional(u: &SpectralField, v: &SpectralField, w: &dyn LineWeight) -> Result<f64> {
    PairMarginals::new(u, v, w.direction(), ProjectionRoute::Auto)?.interaction(w)
}

/// The momentum formula for `∂_t I_ρ` along the linear flow.
pub fn momentum_derivative(u: &SpectralField, v: &SpectralField, w: &dyn LineWeight) -> Result<f64> {
    PairMarginals::new(u, v, w.direction(), ProjectionRoute::Auto)?.momentum(w)
}

/// `‖v‖²‖u‖‖u‖_{Ḣ¹} + ‖u‖²‖v‖‖v‖_{Ḣ¹}`; `|∂_t I| ≤ 2×` this since `|ω·∇ρ| ≤ 1`.
pub fn momentum_bound(u: &SpectralField, v: &SpectralField) -> f64 {
    let hu = u.dirichlet_form().sqrt();
    let hv = v.dirichlet_form().sqrt();
    v.norm_sq() * u.norm() * hu + u.norm_sq() * v.norm() * hv
}

fn time_scale(u: &SpectralField, v: &SpectralField) -> f64 {
    u.active_max_eigenvalue().max(v.active_max_eigenvalue()).max(1.0)
}

fn interaction_at(u0: &SpectralField, v0: &SpectralField, w: &dyn LineWeight, t: f64) -> Result<f64> {
    interaction_functional(&linear_evolve(u0, t), &linear_evolve(v0, t), w)
}

/// Finite-difference check of the momentum formula along the linear flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstDerivativeReport {
    pub t: f64,
    pub step: f64,
    pub fd_coarse: f64,
    pub fd_fine: f64,
    pub richardson: f64,
    pub formula: f64,
    pub residual: f64,
}

/// Centered differences of `I(t)` with steps `h` and `h/2`, Richardson
/// extrapolated, against the momentum formula.
pub fn momentum_fd_check(
    u0: &SpectralField,
    v0: &SpectralField,
    w: &dyn LineWeight,
    t: f64,
) -> Result<FirstDerivativeReport> {
    let h = 0.05 / time_scale(u0, v0);
    let centered = |h: f64| -> Result<f64> {
        Ok((interaction_at(u0, v0, w, t + h)? - interaction_at(u0, v0, w, t - h)?) / (2.0 * h))
    };
    let coarse = centered(h)?;
    let fine = centered(0.5 * h)?;
    let richardson = (4.0 * fine - coarse) / 3.0;
    let formula = momentum_derivative(&linear_evolve(u0, t), &linear_evolve(v0, t), w)?;
    Ok(FirstDerivativeReport {
        t,
        step: h,
        fd_coarse: coarse,
        fd_fine: fine,
        richardson,
        formula,
        residual: (richardson - formula).abs() / formula.abs().max(f64::MIN_POSITIVE),
    })
}

/// Second-derivative identity check at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondDerivativeReport {
    pub direction: [f64; 3],
    pub k: i32,
    pub t: f64,
    pub terms: SecondDerivativeTerms,
    /// FD steps `h, h/2, h/4`.
    pub steps: Vec<f64>,
    pub fd: Vec<f64>,
    /// Relative residuals `|FD − identity| / |identity|` per step.
    pub residuals: Vec<f64>,
    pub richardson: f64,
    pub richardson_residual: f64,
    /// Least-squares slope of `log₂ residual` against `log₂ step`.
    pub order: f64,
    pub converged: bool,
}

/// Compare centered second differences of `I(t)` along the linear flow with
/// the assembled identity at each time in `times`.
pub fn virial_second_derivative_check(
    u0: &SpectralField,
    v0: &SpectralField,
    w: &DirectionalWeight,
    times: &[f64],
) -> Result<Vec<SecondDerivativeReport>> {
    let h0 = 0.2 / time_scale(u0, v0);
    let steps = vec![h0, 0.5 * h0, 0.25 * h0];
    times
        .iter()
        .map(|&t| {
            let (u, v) = (linear_evolve(u0, t), linear_evolve(v0, t));
            let terms = PairMarginals::new(&u, &v, w.direction(), ProjectionRoute::Auto)?.second_derivative(w)?;
            let centre = interaction_functional(&u, &v, w)?;
            let fd = steps
                .iter()
                .map(|&h| {
                    let plus = interaction_at(u0, v0, w, t + h)?;
                    let minus = interaction_at(u0, v0, w, t - h)?;
                    Ok((plus - 2.0 * centre + minus) / (h * h))
                })
                .collect::<Result<Vec<f64>>>()?;
            let scale = terms.total.abs().max(f64::MIN_POSITIVE);
            let residuals: Vec<f64> = fd.iter().map(|d| (d - terms.total).abs() / scale).collect();
            let richardson = (4.0 * fd[2] - fd[1]) / 3.0;
            let xs: Vec<f64> = steps.iter().map(|h| h.log2()).collect();
            let ys: Vec<f64> = residuals.iter().map(|r| r.max(1e-300).log2()).collect();
            let order = ls_slope(&xs, &ys).unwrap_or(0.0);
            let converged = order >= 1.0 && residuals.windows(2).all(|p| p[1] < p[0]);
            Ok(SecondDerivativeReport {
                direction: w.direction(),
                k: w.k(),
                t,
                terms,
                steps: steps.clone(),
                fd,
                residuals,
                richardson,
                richardson_residual: (richardson - terms.total).abs() / scale,
                order,
                converged,
            })
        })
        .collect()
}

/// CSV rows `omega_x,omega_y,omega_z,k,t,lhs,rhs,residual,order` (lhs is the
/// finest finite difference, rhs the assembled identity).
pub fn second_derivative_csv(reports: &[SecondDerivativeReport]) -> String {
    let mut out = String::from("omega_x,omega_y,omega_z,k,t,lhs,rhs,residual,order\n");
    for r in reports {
        let [x, y, z] = r.direction;
        let _ = writeln!(
            out,
            "{x},{y},{z},{},{},{},{},{},{}",
            r.k,
            r.t,
            r.fd.last().copied().unwrap_or(f64::NAN),
            r.terms.total,
            r.residuals.last().copied().unwrap_or(f64::NAN),
            r.order
        );
    }
    out
}

/// A normalized Gaussian wave packet `exp(−|x−x₀|²/(2σ²) + iξ·x)` projected onto the basis.
pub fn gaussian_packet(
    basis: &Arc<EigenBasis>,
    centre: [f64; 3],
    sigma: f64,
    momentum: [f64; 3],
) -> Result<SpectralField> {
    if basis.kind() != DomainKind::Cube {
        return Err(Error::Unsupported("wave packets are implemented on the cube".into()));
    }
    let samples = PhysicalField::from_fn(basis.grid(), |x| {
        let r2: f64 = (0..3).map(|i| (x[i] - centre[i]).powi(2)).sum();
        Complex64::from_polar((-0.5 * r2 / (sigma * sigma)).exp(), dot(momentum, x))
    });
    let f = basis.analyze(&samples)?;
    let norm = f.norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("wave packet has no resolved content".into()));
    }
    Ok(f.scaled(Complex64::new(1.0 / norm, 0.0)))
}
