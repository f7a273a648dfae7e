use std::sync::Arc;

use num_complex::Complex64;

use super::{dense_offset, face_axes, DomainKind, EigenBasis, Grid, GridKind, CUBE_FACES};
use crate::error::{Error, Result};

/// Coefficients over an [`EigenBasis`], in the basis' mode order.
#[derive(Debug, Clone)]
pub struct SpectralField {
    basis: Arc<EigenBasis>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: &Arc<EigenBasis>) -> Self {
        Self {
            basis: basis.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); basis.len()],
        }
    }

    /// Unit coefficient on one mode.
    pub fn mode(basis: &Arc<EigenBasis>, index: [usize; 3]) -> Result<Self> {
        let pos = basis
            .position(index)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {index:?} not in basis")))?;
        let mut f = Self::zeros(basis);
        f.coeffs[pos] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `Σ|c_n|²`.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Dirichlet form `Σ λ_n |c_n|² = ‖∇f‖²`.
    pub fn dirichlet_form(&self) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| m.eigenvalue * c.norm_sqr())
            .sum()
    }

    /// `⟨self, other⟩ = Σ c_n conj(d_n)`.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    fn check_same(&self, other: &SpectralField) -> Result<()> {
        if self.basis.same_layout(&other.basis) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("fields live on different bases".into()))
        }
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: Complex64, other: &SpectralField) -> Result<SpectralField> {
        self.check_same(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(SpectralField {
            basis: self.basis.clone(),
            coeffs,
        })
    }

    pub fn scaled(&self, alpha: Complex64) -> SpectralField {
        SpectralField {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    /// Apply `c_n ↦ m(λ_n)·c_n`.
    pub fn map_eigen<F: Fn(f64) -> Complex64>(&self, m: F) -> SpectralField {
        SpectralField {
            basis: self.basis.clone(),
            coeffs: self
                .basis
                .modes()
                .iter()
                .zip(&self.coeffs)
                .map(|(mode, c)| c * m(mode.eigenvalue))
                .collect(),
        }
    }

    /// Coefficients multiplied by `(−λ_n)^l`.
    pub fn laplacian_power(&self, l: u32) -> SpectralField {
        self.map_eigen(|lam| Complex64::new((-lam).powi(l as i32), 0.0))
    }

    pub fn conj(&self) -> SpectralField {
        SpectralField {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    /// Largest per-axis index carrying a nonzero coefficient (0 for the zero field).
    pub fn active_extent(&self) -> usize {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(m, _)| m.index.iter().copied().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Largest eigenvalue carrying a nonzero coefficient.
    pub fn active_max_eigenvalue(&self) -> f64 {
        self.basis
            .modes()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(m, _)| m.eigenvalue)
            .fold(0.0, f64::max)
    }

    /// Dense block of all modes with per-axis index `≤ n` (cube: `n³`, ball: `n`).
    pub fn to_dense(&self, n: usize) -> Vec<Complex64> {
        let kind = self.basis.kind();
        let len = match kind {
            DomainKind::Cube => n * n * n,
            DomainKind::RadialBall => n,
        };
        let mut dense = vec![Complex64::new(0.0, 0.0); len];
        for (m, &c) in self.basis.modes().iter().zip(&self.coeffs) {
            if m.index.iter().all(|&i| i <= n) {
                dense[dense_offset(kind, m.index, n)] = c;
            }
        }
        dense
    }

    /// Inverse of [`to_dense`](Self::to_dense); modes beyond the block are zero.
    pub fn from_dense(basis: &Arc<EigenBasis>, dense: &[Complex64], n: usize) -> SpectralField {
        let kind = basis.kind();
        let coeffs = basis
            .modes()
            .iter()
            .map(|m| {
                if m.index.iter().all(|&i| i <= n) {
                    dense[dense_offset(kind, m.index, n)]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        SpectralField {
            basis: basis.clone(),
            coeffs,
        }
    }

    /// Re-express on another basis of the same domain: shared modes are copied,
    /// the rest are zero (zero padding or truncation).
    pub fn transfer(&self, target: &Arc<EigenBasis>) -> Result<SpectralField> {
        if target.kind() != self.basis.kind() {
            return Err(Error::ShapeMismatch("cannot transfer across domains".into()));
        }
        let mut out = SpectralField::zeros(target);
        for (m, &c) in self.basis.modes().iter().zip(&self.coeffs) {
            if let Some(p) = target.position(m.index) {
                out.coeffs[p] = c;
            }
        }
        Ok(out)
    }
}

/// Complex samples on a structured grid.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample a closure at the grid points.
    pub fn from_fn<F: Fn([f64; 3]) -> Complex64>(grid: &Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Quadrature of a real function of the samples.
    pub fn integrate<F: Fn(Complex64) -> f64>(&self, f: F) -> f64 {
        match self.grid.kind() {
            GridKind::Cube => {
                self.values.iter().map(|&v| f(v)).sum::<f64>() * self.grid.weight(0)
            }
            _ => self
                .values
                .iter()
                .zip(self.grid.radial_weights())
                .map(|(&v, w)| f(v) * w)
                .sum(),
        }
    }

    /// `∫|g|²` by grid quadrature.
    pub fn l2_sq(&self) -> f64 {
        self.integrate(|v| v.norm_sqr())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One boundary sample with its position, outward normal and surface weight.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub position: [f64; 3],
    pub normal: [f64; 3],
    pub weight: f64,
    pub value: Complex64,
}

/// Samples on `∂Ω`: six `G²` face grids on the cube (face order
/// [`CUBE_FACES`]), a single value on the sphere.
#[derive(Debug, Clone)]
pub struct BoundaryField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl BoundaryField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        let expected = match grid.kind() {
            GridKind::Cube => 6 * grid.size() * grid.size(),
            _ => 1,
        };
        if values.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "boundary field needs {expected} samples, got {}",
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Samples of one cube face (row-major over its two tangential axes).
    pub fn face(&self, face: usize) -> &[Complex64] {
        let g2 = self.grid.size() * self.grid.size();
        &self.values[face * g2..(face + 1) * g2]
    }

    fn sample_weight(&self) -> f64 {
        match self.grid.kind() {
            GridKind::Cube => self.grid.spacing().powi(2),
            _ => 4.0 * std::f64::consts::PI,
        }
    }

    /// `∫_{∂Ω}|g|² dS` by surface quadrature.
    pub fn integral_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.sample_weight()
    }

    /// All samples with geometry attached.
    pub fn samples(&self) -> Vec<BoundarySample> {
        let w = self.sample_weight();
        match self.grid.kind() {
            GridKind::Cube => {
                let g = self.grid.size();
                let pts = self.grid.axis_points();
                let mut out = Vec::with_capacity(self.values.len());
                for (face, &(axis, side)) in CUBE_FACES.iter().enumerate() {
                    let (ta, tb) = face_axes(axis);
                    let mut normal = [0.0; 3];
                    normal[axis] = if side == 0 { -1.0 } else { 1.0 };
                    for p in 0..g {
                        for q in 0..g {
                            let mut position = [0.0; 3];
                            position[axis] = if side == 0 { 0.0 } else { std::f64::consts::PI };
                            position[ta] = pts[p];
                            position[tb] = pts[q];
                            out.push(BoundarySample {
                                position,
                                normal,
                                weight: w,
                                value: self.values[face * g * g + p * g + q],
                            });
                        }
                    }
                }
                out
            }
            _ => vec![BoundarySample {
                position: [1.0, 0.0, 0.0],
                normal: [1.0, 0.0, 0.0],
                weight: w,
                value: self.values[0],
            }],
        }
    }
}

impl SpectralField {
    /// Point value by direct summation (cube point `x`, or `[r, _, _]` on the ball).
    pub fn value_at(&self, x: [f64; 3]) -> Complex64 {
        let modes = self.basis.modes();
        match self.basis.kind() {
            DomainKind::Cube => {
                let n = self.basis.n_axis();
                let tables: Vec<Vec<f64>> = x
                    .iter()
                    .map(|&xi| (1..=n).map(|a| (a as f64 * xi).sin()).collect())
                    .collect();
                modes
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(m, &c)| {
                        let [a, b, cc] = m.index;
                        c * (tables[0][a - 1] * tables[1][b - 1] * tables[2][cc - 1])
                    })
                    .sum::<Complex64>()
                    * super::cube_norm()
            }
            DomainKind::RadialBall => {
                let r = x[0];
                modes
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(m, &c)| {
                        let k = m.index[0] as f64 * std::f64::consts::PI;
                        let v = if r == 0.0 { k } else { (k * r).sin() / r };
                        c * v
                    })
                    .sum::<Complex64>()
                    * super::ball_norm()
            }
        }
    }
}
