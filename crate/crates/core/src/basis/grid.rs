use std::f64::consts::PI;
use std::sync::Arc;

use crate::quadrature::GaussLegendre;

/// Sampling layout of a physical field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Interior sine grid `x_g = π g/(G+1)`, `g = 1..G`, on each axis of `[0,π]³`.
    Cube,
    /// Uniform interior radial grid `r_g = g/(G+1)` on the unit ball.
    RadialUniform,
    /// Gauss-Legendre radial nodes on `[0,1]` (spectrally accurate radial integrals).
    RadialGauss,
}

#[derive(Debug)]
struct GridData {
    kind: GridKind,
    size: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    spacing: f64,
}

/// Structured sample grid with quadrature weights. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Grid {
    data: Arc<GridData>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.data.kind == other.data.kind && self.data.size == other.data.size
    }
}

impl Grid {
    pub fn cube(g: usize) -> Self {
        assert!(g >= 1);
        let h = PI / (g + 1) as f64;
        let points = (1..=g).map(|i| i as f64 * h).collect();
        Self {
            data: Arc::new(GridData {
                kind: GridKind::Cube,
                size: g,
                points,
                weights: vec![h; g],
                spacing: h,
            }),
        }
    }

    pub fn radial_uniform(g: usize) -> Self {
        assert!(g >= 1);
        let h = 1.0 / (g + 1) as f64;
        let points: Vec<f64> = (1..=g).map(|i| i as f64 * h).collect();
        let weights = points.iter().map(|r| 4.0 * PI * r * r * h).collect();
        Self {
            data: Arc::new(GridData {
                kind: GridKind::RadialUniform,
                size: g,
                points,
                weights,
                spacing: h,
            }),
        }
    }

    pub fn radial_gauss(m: usize) -> Self {
        assert!(m >= 1);
        let rule = GaussLegendre::new(m);
        let (points, weights): (Vec<f64>, Vec<f64>) = rule
            .mapped(0.0, 1.0)
            .map(|(r, w)| (r, 4.0 * PI * r * r * w))
            .unzip();
        Self {
            data: Arc::new(GridData {
                kind: GridKind::RadialGauss,
                size: m,
                points,
                weights,
                spacing: 1.0 / m as f64,
            }),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.data.kind
    }

    /// Per-axis (cube) or radial sample count.
    pub fn size(&self) -> usize {
        self.data.size
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        match self.data.kind {
            GridKind::Cube => self.data.size.pow(3),
            _ => self.data.size,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis coordinates (cube) or radii (ball).
    pub fn axis_points(&self) -> &[f64] {
        &self.data.points
    }

    /// Uniform spacing (cube: π/(G+1); uniform radial: 1/(G+1)).
    pub fn spacing(&self) -> f64 {
        self.data.spacing
    }

    /// Position of sample `i` (radial grids report `[r, 0, 0]`).
    pub fn point(&self, i: usize) -> [f64; 3] {
        let p = &self.data.points;
        match self.data.kind {
            GridKind::Cube => {
                let g = self.data.size;
                [p[i / (g * g)], p[(i / g) % g], p[i % g]]
            }
            _ => [p[i], 0.0, 0.0],
        }
    }

    /// Quadrature weight of sample `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match self.data.kind {
            GridKind::Cube => self.data.spacing.powi(3),
            _ => self.data.weights[i],
        }
    }

    /// Quadrature of real samples laid out like this grid.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.len());
        match self.data.kind {
            GridKind::Cube => samples.iter().sum::<f64>() * self.data.spacing.powi(3),
            _ => samples.iter().zip(&self.data.weights).map(|(v, w)| v * w).sum(),
        }
    }

    /// Weights for the radial grid (empty for the cube, whose weight is constant).
    pub fn radial_weights(&self) -> &[f64] {
        match self.data.kind {
            GridKind::Cube => &[],
            _ => &self.data.weights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_grid_volume() {
        let g = Grid::cube(7);
        let ones = vec![1.0; g.len()];
        // The interior sine grid misses the boundary planes; the weights sum to (Gh)^3.
        let h = PI / 8.0;
        assert!((g.integrate(&ones) - (7.0 * h).powi(3)).abs() < 1e-12);
        assert_eq!(g.point(0), [h, h, h]);
        assert_eq!(g.point(7 * 7 * 7 - 1), [7.0 * h, 7.0 * h, 7.0 * h]);
    }

    #[test]
    fn gauss_radial_grid_integrates_ball_volume() {
        let g = Grid::radial_gauss(10);
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones) - 4.0 * PI / 3.0).abs() < 1e-13);
    }
}
