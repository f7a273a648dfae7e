//! Dirichlet eigenbases for the cube `[0,π]³` and radial functions on the unit
//! ball, with synthesis/analysis transforms, gradients and normal traces.

mod field;
mod grid;
mod sine;
pub mod snapshot;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use field::{BoundaryField, BoundarySample, PhysicalField, SpectralField};
pub use grid::{Grid, GridKind};
pub use sine::{CubeTransform, LineShape, LineTransform, Parity};

/// Version tag of the exposed mode ordering (ascending eigenvalue, ties broken
/// lexicographically by index tuple).
pub const ORDERING_VERSION: u32 = 1;

/// L²-normalization of a cube eigenfunction, `(2/π)^{3/2}`.
pub fn cube_norm() -> f64 {
    (2.0 / PI).powf(1.5)
}

/// L²-normalization of a radial ball eigenfunction, `1/√(2π)`.
pub fn ball_norm() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Cube,
    RadialBall,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainKind::Cube => write!(f, "cube"),
            DomainKind::RadialBall => write!(f, "radial_ball"),
        }
    }
}

fn default_oversampling() -> usize {
    2
}

/// Domain and resolution: side π for the cube, radius 1 for the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Maximum mode index per axis (radial index for the ball).
    pub n_max: usize,
    /// Grid oversampling factor q.
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
}

impl DomainSpec {
    pub fn cube(n_max: usize) -> Self {
        Self {
            kind: DomainKind::Cube,
            n_max,
            oversampling: 2,
        }
    }

    pub fn ball(n_max: usize) -> Self {
        Self {
            kind: DomainKind::RadialBall,
            n_max,
            oversampling: 2,
        }
    }

    pub fn with_oversampling(mut self, q: usize) -> Self {
        self.oversampling = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(Error::InvalidDomain(format!(
                "max mode index must be at least 2, got {}",
                self.n_max
            )));
        }
        if self.oversampling < 2 {
            return Err(Error::InvalidDomain(format!(
                "oversampling factor must be at least 2, got {}",
                self.oversampling
            )));
        }
        Ok(())
    }

    /// Interior samples per axis: `q·N − 1`, so that the spacing is `π/(qN)`
    /// (cube) or `1/(qN)` (ball).
    pub fn grid_size(&self) -> usize {
        self.oversampling * self.n_max - 1
    }
}

/// One eigenmode: index tuple (`[n, 0, 0]` on the ball) and eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: [usize; 3],
    pub eigenvalue: f64,
}

impl Mode {
    pub fn frequency(&self) -> f64 {
        self.eigenvalue.sqrt()
    }
}

/// All cube modes with `1 ≤ a,b,c ≤ n`, in exposed order.
pub fn cube_modes(n: usize) -> Vec<Mode> {
    let mut modes = Vec::with_capacity(n * n * n);
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                modes.push(Mode {
                    index: [a, b, c],
                    eigenvalue: (a * a + b * b + c * c) as f64,
                });
            }
        }
    }
    modes.sort_by(|x, y| {
        x.eigenvalue
            .total_cmp(&y.eigenvalue)
            .then_with(|| x.index.cmp(&y.index))
    });
    modes
}

/// Radial ball modes `1 ≤ n ≤ count`, eigenvalue `(nπ)²`.
pub fn radial_modes(count: usize) -> Vec<Mode> {
    (1..=count)
        .map(|n| Mode {
            index: [n, 0, 0],
            eigenvalue: (n as f64 * PI).powi(2),
        })
        .collect()
}

/// Evaluates spectral fields on a particular grid.
#[derive(Debug, Clone)]
pub enum Sampler {
    Cube { transform: CubeTransform, grid: Grid },
    Radial { grid: Grid },
}

impl Sampler {
    pub fn new(grid: &Grid) -> Self {
        match grid.kind() {
            GridKind::Cube => Sampler::Cube {
                transform: CubeTransform::new(grid.size()),
                grid: grid.clone(),
            },
            _ => Sampler::Radial { grid: grid.clone() },
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Sampler::Cube { grid, .. } | Sampler::Radial { grid } => grid,
        }
    }

    fn check_domain(&self, f: &SpectralField) -> Result<()> {
        let ok = matches!(
            (self, f.basis().kind()),
            (Sampler::Cube { .. }, DomainKind::Cube) | (Sampler::Radial { .. }, DomainKind::RadialBall)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "grid {:?} cannot sample a {} field",
                self.grid().kind(),
                f.basis().kind()
            )))
        }
    }

    fn cube_extent(&self, f: &SpectralField) -> Result<usize> {
        let n = f.active_extent().max(1);
        if n > self.grid().size() {
            return Err(Error::ShapeMismatch(format!(
                "field resolution {n} exceeds grid size {}",
                self.grid().size()
            )));
        }
        Ok(n)
    }

    /// Samples of `Σ c_n e_n`.
    pub fn values(&self, f: &SpectralField) -> Result<PhysicalField> {
        self.check_domain(f)?;
        match self {
            Sampler::Cube { transform, grid } => {
                let n = self.cube_extent(f)?;
                let dense = f.to_dense(n);
                let vals = transform.synthesize(
                    &dense,
                    n,
                    [Parity::Sine; 3],
                    [None, None, None],
                    cube_norm(),
                );
                PhysicalField::new(grid.clone(), vals)
            }
            Sampler::Radial { grid } => {
                let vals = radial_sum(f, grid.axis_points(), RadialKernel::Value);
                PhysicalField::new(grid.clone(), vals)
            }
        }
    }

    /// Gradient samples: three Cartesian components on the cube, the radial
    /// derivative on the ball.
    pub fn gradient(&self, f: &SpectralField) -> Result<Vec<PhysicalField>> {
        self.check_domain(f)?;
        match self {
            Sampler::Cube { transform, grid } => {
                let n = self.cube_extent(f)?;
                let dense = f.to_dense(n);
                let w: Vec<f64> = (1..=n).map(|a| a as f64).collect();
                (0..3)
                    .map(|axis| {
                        let mut parity = [Parity::Sine; 3];
                        parity[axis] = Parity::Cosine;
                        let mut weights: [Option<&[f64]>; 3] = [None, None, None];
                        weights[axis] = Some(&w);
                        let vals = transform.synthesize(&dense, n, parity, weights, cube_norm());
                        PhysicalField::new(grid.clone(), vals)
                    })
                    .collect()
            }
            Sampler::Radial { grid } => {
                let vals = radial_sum(f, grid.axis_points(), RadialKernel::Derivative);
                Ok(vec![PhysicalField::new(grid.clone(), vals)?])
            }
        }
    }

    /// Quadrature projections onto the modes of `basis`.
    pub fn analyze(&self, g: &PhysicalField, basis: &Arc<EigenBasis>) -> Result<SpectralField> {
        if g.grid() != self.grid() {
            return Err(Error::ShapeMismatch("field not sampled on this grid".into()));
        }
        match (self, basis.kind()) {
            (Sampler::Cube { transform, grid }, DomainKind::Cube) => {
                let n = basis.n_axis().min(grid.size());
                let scale = grid.spacing().powi(3) * cube_norm();
                let dense = transform.analyze(g.values(), n, scale);
                Ok(SpectralField::from_dense(basis, &dense, n))
            }
            (Sampler::Radial { grid }, DomainKind::RadialBall) => {
                let norm = ball_norm();
                let radii = grid.axis_points();
                let weights = grid.radial_weights();
                let coeffs = basis
                    .modes()
                    .iter()
                    .map(|m| {
                        let k = m.index[0] as f64 * PI;
                        g.values()
                            .iter()
                            .zip(radii)
                            .zip(weights)
                            .map(|((v, &r), &w)| v * (w * norm * (k * r).sin() / r))
                            .sum()
                    })
                    .collect();
                SpectralField::new(basis.clone(), coeffs)
            }
            _ => Err(Error::ShapeMismatch("grid and basis domains differ".into())),
        }
    }
}

#[derive(Clone, Copy)]
enum RadialKernel {
    Value,
    Derivative,
}

fn radial_sum(f: &SpectralField, radii: &[f64], kernel: RadialKernel) -> Vec<Complex64> {
    let norm = ball_norm();
    let active: Vec<(f64, Complex64)> = f
        .basis()
        .modes()
        .iter()
        .zip(f.coeffs())
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(m, &c)| (m.index[0] as f64 * PI, c))
        .collect();
    radii
        .iter()
        .map(|&r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(k, c) in &active {
                let (s, co) = (k * r).sin_cos();
                let v = match kernel {
                    RadialKernel::Value => s / r,
                    RadialKernel::Derivative => k * co / r - s / (r * r),
                };
                acc += c * v;
            }
            acc * norm
        })
        .collect()
}

/// An immutable Dirichlet eigensystem together with its sampling grid.
#[derive(Debug)]
pub struct EigenBasis {
    spec: DomainSpec,
    n_axis: usize,
    resolved: bool,
    modes: Vec<Mode>,
    /// Dense position (cube: `[a-1][b-1][c-1]` in `n_axis³`; ball: `n-1`) to mode position.
    lookup: Vec<u32>,
    sampler: Sampler,
    bands: OnceLock<crate::spectral::LittlewoodPaley>,
}

impl EigenBasis {
    /// Build the basis for a validated domain specification.
    pub fn new(spec: DomainSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        Ok(Arc::new(Self::assemble(spec, spec.n_max, false)))
    }

    fn assemble(spec: DomainSpec, n_axis: usize, resolved: bool) -> Self {
        let g = spec.grid_size();
        let (modes, grid) = match spec.kind {
            DomainKind::Cube => (cube_modes(n_axis), Grid::cube(g)),
            DomainKind::RadialBall => (radial_modes(n_axis), Grid::radial_uniform(g)),
        };
        let dense_len = match spec.kind {
            DomainKind::Cube => n_axis.pow(3),
            DomainKind::RadialBall => n_axis,
        };
        let mut lookup = vec![u32::MAX; dense_len];
        for (pos, m) in modes.iter().enumerate() {
            lookup[dense_offset(spec.kind, m.index, n_axis)] = pos as u32;
        }
        let sampler = Sampler::new(&grid);
        Self {
            spec,
            n_axis,
            resolved,
            modes,
            lookup,
            sampler,
            bands: OnceLock::new(),
        }
    }

    /// The basis of every mode representable on this basis' grid (`G` per axis).
    /// Used by the nonlinear integrator so both split substeps are exactly unitary.
    pub fn resolved(&self) -> Arc<Self> {
        Arc::new(Self::assemble(self.spec, self.spec.grid_size(), true))
    }

    pub fn spec(&self) -> DomainSpec {
        self.spec
    }

    pub fn kind(&self) -> DomainKind {
        self.spec.kind
    }

    /// Maximum index per axis of the exposed modes.
    pub fn n_axis(&self) -> usize {
        self.n_axis
    }

    pub fn is_resolved(&self) -> bool {
        self.resolved
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.sampler.grid()
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub(crate) fn band_cache(&self) -> &OnceLock<crate::spectral::LittlewoodPaley> {
        &self.bands
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.eigenvalue)
    }

    /// Position of the mode with the given index tuple (`[n,0,0]` on the ball).
    pub fn position(&self, index: [usize; 3]) -> Option<usize> {
        let inside = match self.spec.kind {
            DomainKind::Cube => index.iter().all(|&i| (1..=self.n_axis).contains(&i)),
            DomainKind::RadialBall => (1..=self.n_axis).contains(&index[0]),
        };
        if !inside {
            return None;
        }
        let p = self.lookup[dense_offset(self.spec.kind, index, self.n_axis)];
        (p != u32::MAX).then_some(p as usize)
    }

    /// Samples of the field on the basis grid.
    pub fn synthesize(&self, f: &SpectralField) -> Result<PhysicalField> {
        self.check_owner(f)?;
        self.sampler.values(f)
    }

    /// Quadrature projections of grid samples onto the modes.
    pub fn analyze(self: &Arc<Self>, g: &PhysicalField) -> Result<SpectralField> {
        self.sampler.analyze(g, self)
    }

    pub fn gradient(&self, f: &SpectralField) -> Result<Vec<PhysicalField>> {
        self.check_owner(f)?;
        self.sampler.gradient(f)
    }

    fn check_owner(&self, f: &SpectralField) -> Result<()> {
        if std::ptr::eq(f.basis().as_ref(), self) || f.basis().same_layout(self) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("field belongs to a different basis".into()))
        }
    }

    /// True when both bases expose identical mode lists.
    pub fn same_layout(&self, other: &EigenBasis) -> bool {
        self.spec.kind == other.spec.kind && self.n_axis == other.n_axis
    }

    /// Outward normal derivative sampled on the boundary.
    pub fn normal_trace(&self, f: &SpectralField) -> Result<BoundaryField> {
        self.check_owner(f)?;
        match self.spec.kind {
            DomainKind::Cube => {
                let g = self.grid().size();
                let n = f.active_extent().max(1).min(g);
                let transform = match &self.sampler {
                    Sampler::Cube { transform, .. } => transform,
                    Sampler::Radial { .. } => unreachable!(),
                };
                let mut values = Vec::with_capacity(6 * g * g);
                for face in 0..6 {
                    let dense = cube_face_coefficients(f, face, n);
                    values.extend(transform.synthesize_face(&dense, n, cube_norm()));
                }
                BoundaryField::new(self.grid().clone(), values)
            }
            DomainKind::RadialBall => {
                BoundaryField::new(self.grid().clone(), vec![radial_boundary_derivative(f)])
            }
        }
    }

    /// `∫_{∂Ω} |∂_n f|² dS` evaluated exactly from the coefficients (face
    /// Parseval on the cube, the single surface value on the ball).
    pub fn boundary_flux_energy(&self, f: &SpectralField) -> f64 {
        match self.spec.kind {
            DomainKind::Cube => {
                let n = f.active_extent().max(1);
                (0..6)
                    .map(|face| {
                        cube_face_coefficients(f, face, n)
                            .iter()
                            .map(|d| d.norm_sqr())
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    * (2.0 / PI)
            }
            DomainKind::RadialBall => 4.0 * PI * radial_boundary_derivative(f).norm_sqr(),
        }
    }

    /// `∫|∇f|²` by quadrature: interior trapezoid plus the boundary-plane
    /// half-weights on the cube; a Gauss-Legendre radial rule on the ball.
    pub fn dirichlet_form_quadrature(&self, f: &SpectralField) -> Result<f64> {
        match self.spec.kind {
            DomainKind::Cube => {
                let grad = self.gradient(f)?;
                let interior: f64 = grad.iter().map(|c| c.l2_sq()).sum();
                let h = self.grid().spacing();
                let trace = self.normal_trace(f)?;
                Ok(interior + 0.5 * h * trace.integral_sq())
            }
            DomainKind::RadialBall => {
                let grid = Grid::radial_gauss(4 * f.active_extent().max(1) + 32);
                let grad = Sampler::new(&grid).gradient(f)?;
                Ok(grad[0].l2_sq())
            }
        }
    }
}

pub(crate) fn dense_offset(kind: DomainKind, index: [usize; 3], n: usize) -> usize {
    match kind {
        DomainKind::Cube => ((index[0] - 1) * n + (index[1] - 1)) * n + (index[2] - 1),
        DomainKind::RadialBall => index[0] - 1,
    }
}

/// Face ordering: `(axis, side)` with side 0 at coordinate 0 (outward normal
/// `−e_axis`) and side 1 at coordinate π (outward normal `+e_axis`).
pub const CUBE_FACES: [(usize, usize); 6] = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)];

/// Tangential axes of a face, in increasing order.
pub fn face_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Coefficients `d_{pq}` (`n²` block) of `∂_n f` on a cube face in the 2D sine basis.
fn cube_face_coefficients(f: &SpectralField, face: usize, n: usize) -> Vec<Complex64> {
    let (axis, side) = CUBE_FACES[face];
    let (ta, tb) = face_axes(axis);
    let mut dense = vec![Complex64::new(0.0, 0.0); n * n];
    for (m, &c) in f.basis().modes().iter().zip(f.coeffs()) {
        let idx = m.index;
        if idx[ta] > n || idx[tb] > n || c.norm_sqr() == 0.0 {
            continue;
        }
        let a = idx[axis] as f64;
        let factor = if side == 0 {
            -a
        } else if idx[axis] % 2 == 0 {
            a
        } else {
            -a
        };
        dense[(idx[ta] - 1) * n + (idx[tb] - 1)] += c * factor;
    }
    dense
}

fn radial_boundary_derivative(f: &SpectralField) -> Complex64 {
    let norm = ball_norm();
    f.basis()
        .modes()
        .iter()
        .zip(f.coeffs())
        .map(|(m, &c)| {
            let n = m.index[0];
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            c * (n as f64 * PI * sign * norm)
        })
        .sum()
}

#[cfg(test)]
mod tests;
