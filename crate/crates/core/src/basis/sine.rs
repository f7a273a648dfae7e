//! Batched sine/cosine sums on the interior sine grid, evaluated through a
//! length-2(G+1) complex FFT.
//!
//! For a line of inputs `c_1..c_n` the transform returns, for `p = 1..n_out`,
//! `Σ_q c_q sin(π p q / (G+1))` (or the cosine analogue). The same kernel
//! serves synthesis (modes to grid points) and analysis (grid points to modes)
//! because the kernel is symmetric in `p` and `q`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const BLOCK: usize = 8;

/// Trigonometric kernel used along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Sine,
    Cosine,
}

/// Shape of a batched line transform over a row-major array laid out as
/// `[outer][line][inner]`; the transform acts along the middle axis.
#[derive(Debug, Clone, Copy)]
pub struct LineShape {
    pub outer: usize,
    pub inner: usize,
    pub n_in: usize,
    pub n_out: usize,
}

/// Planned sine/cosine line transform for a grid with `g` interior points.
#[derive(Clone)]
pub struct LineTransform {
    g: usize,
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LineTransform").field("g", &self.g).finish()
    }
}

impl LineTransform {
    pub fn new(g: usize) -> Self {
        assert!(g >= 1, "grid must have at least one interior point");
        let len = 2 * (g + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self { g, len, fft }
    }

    pub fn grid_size(&self) -> usize {
        self.g
    }

    /// Apply the line transform. `weights`, when given, multiplies input index
    /// `q` (1-based position `q+1`) by `weights[q]`; `scale` multiplies outputs.
    pub fn apply(
        &self,
        src: &[Complex64],
        dst: &mut [Complex64],
        shape: LineShape,
        parity: Parity,
        weights: Option<&[f64]>,
        scale: f64,
    ) {
        let LineShape {
            outer,
            inner,
            n_in,
            n_out,
        } = shape;
        assert!(n_in <= self.g && n_out <= self.g, "line length exceeds grid");
        assert_eq!(src.len(), outer * n_in * inner, "source shape mismatch");
        assert_eq!(dst.len(), outer * n_out * inner, "destination shape mismatch");
        if let Some(w) = weights {
            assert!(w.len() >= n_in, "weight vector too short");
        }
        let l = self.len;
        let lines = outer * inner;
        let mut buf = vec![Complex64::new(0.0, 0.0); BLOCK * l];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let combine = match parity {
            Parity::Sine => Complex64::new(0.0, -0.5 * scale),
            Parity::Cosine => Complex64::new(0.5 * scale, 0.0),
        };
        let mut line0 = 0;
        while line0 < lines {
            let nb = BLOCK.min(lines - line0);
            let block = &mut buf[..nb * l];
            block.fill(Complex64::new(0.0, 0.0));
            for k in 0..nb {
                let line = line0 + k;
                let (o, i) = (line / inner, line % inner);
                let row = &mut block[k * l..(k + 1) * l];
                for q in 0..n_in {
                    let v = src[(o * n_in + q) * inner + i];
                    row[q + 1] = match weights {
                        Some(w) => v * w[q],
                        None => v,
                    };
                }
            }
            self.fft.process_with_scratch(block, &mut scratch);
            for k in 0..nb {
                let line = line0 + k;
                let (o, i) = (line / inner, line % inner);
                let row = &block[k * l..(k + 1) * l];
                for p in 1..=n_out {
                    let zp = row[p];
                    let zm = row[l - p];
                    let v = match parity {
                        Parity::Sine => (zm - zp) * combine,
                        Parity::Cosine => (zp + zm) * combine,
                    };
                    dst[(o * n_out + p - 1) * inner + i] = v;
                }
            }
            line0 += nb;
        }
    }
}

/// Separable 3D transforms on a `g`-per-axis interior grid.
#[derive(Debug, Clone)]
pub struct CubeTransform {
    line: LineTransform,
}

impl CubeTransform {
    pub fn new(g: usize) -> Self {
        Self {
            line: LineTransform::new(g),
        }
    }

    pub fn grid_size(&self) -> usize {
        self.line.grid_size()
    }

    pub fn line(&self) -> &LineTransform {
        &self.line
    }

    /// Evaluate `scale · Σ_{abc} d_{abc} w_a w_b w_c T_a(x) T_b(y) T_c(z)` on the
    /// grid, where `dense` is an `n³` block indexed `[a-1][b-1][c-1]`.
    pub fn synthesize(
        &self,
        dense: &[Complex64],
        n: usize,
        parity: [Parity; 3],
        weights: [Option<&[f64]>; 3],
        scale: f64,
    ) -> Vec<Complex64> {
        let g = self.grid_size();
        assert_eq!(dense.len(), n * n * n);
        let zero = Complex64::new(0.0, 0.0);
        let mut s1 = vec![zero; n * n * g];
        self.line.apply(
            dense,
            &mut s1,
            LineShape {
                outer: n * n,
                inner: 1,
                n_in: n,
                n_out: g,
            },
            parity[2],
            weights[2],
            1.0,
        );
        let mut s2 = vec![zero; n * g * g];
        self.line.apply(
            &s1,
            &mut s2,
            LineShape {
                outer: n,
                inner: g,
                n_in: n,
                n_out: g,
            },
            parity[1],
            weights[1],
            1.0,
        );
        drop(s1);
        let mut out = vec![zero; g * g * g];
        self.line.apply(
            &s2,
            &mut out,
            LineShape {
                outer: 1,
                inner: g * g,
                n_in: n,
                n_out: g,
            },
            parity[0],
            weights[0],
            scale,
        );
        out
    }

    /// Sine projections `scale · Σ_{xyz} v(x,y,z) sin(ax) sin(by) sin(cz)` for
    /// `1 ≤ a,b,c ≤ n`, returned as an `n³` block.
    pub fn analyze(&self, values: &[Complex64], n: usize, scale: f64) -> Vec<Complex64> {
        let g = self.grid_size();
        assert_eq!(values.len(), g * g * g);
        let zero = Complex64::new(0.0, 0.0);
        let mut s1 = vec![zero; n * g * g];
        self.line.apply(
            values,
            &mut s1,
            LineShape {
                outer: 1,
                inner: g * g,
                n_in: g,
                n_out: n,
            },
            Parity::Sine,
            None,
            1.0,
        );
        let mut s2 = vec![zero; n * n * g];
        self.line.apply(
            &s1,
            &mut s2,
            LineShape {
                outer: n,
                inner: g,
                n_in: g,
                n_out: n,
            },
            Parity::Sine,
            None,
            1.0,
        );
        drop(s1);
        let mut out = vec![zero; n * n * n];
        self.line.apply(
            &s2,
            &mut out,
            LineShape {
                outer: n * n,
                inner: 1,
                n_in: g,
                n_out: n,
            },
            Parity::Sine,
            None,
            scale,
        );
        out
    }

    /// 2D sine synthesis of an `n²` face-coefficient block onto the `g²` face grid.
    pub fn synthesize_face(&self, dense: &[Complex64], n: usize, scale: f64) -> Vec<Complex64> {
        let g = self.grid_size();
        assert_eq!(dense.len(), n * n);
        let zero = Complex64::new(0.0, 0.0);
        let mut s1 = vec![zero; n * g];
        self.line.apply(
            dense,
            &mut s1,
            LineShape {
                outer: n,
                inner: 1,
                n_in: n,
                n_out: g,
            },
            Parity::Sine,
            None,
            1.0,
        );
        let mut out = vec![zero; g * g];
        self.line.apply(
            &s1,
            &mut out,
            LineShape {
                outer: 1,
                inner: g,
                n_in: n,
                n_out: g,
            },
            Parity::Sine,
            None,
            scale,
        );
        out
    }
}
