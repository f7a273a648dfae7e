//! Spectral calculus: smooth cutoffs, Littlewood-Paley bands, Besov/Sobolev and
//! log-Besov norms, and the auxiliary operators `Q_l` and `D_j`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{EigenBasis, PhysicalField, SpectralField};
use crate::error::{Error, Result};

/// The closed-form C^∞ cutoff: `Φ = 1` on `[0, 1]`, `Φ = 0` on `[11/10, ∞)`,
/// built from the transition `χ(t) = e^{−1/t}` for `t > 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BumpFunction;

impl BumpFunction {
    pub const PLATEAU_END: f64 = 1.0;
    pub const SUPPORT_END: f64 = 1.1;

    /// `χ(t) = e^{−1/t}` for `t > 0`, zero otherwise.
    pub fn transition(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }

    /// Cutoff profile `Φ(ξ)`.
    pub fn cutoff(xi: f64) -> f64 {
        if xi <= Self::PLATEAU_END {
            return 1.0;
        }
        if xi >= Self::SUPPORT_END {
            return 0.0;
        }
        let t = (xi - Self::PLATEAU_END) / (Self::SUPPORT_END - Self::PLATEAU_END);
        let a = Self::transition(1.0 - t);
        let b = Self::transition(t);
        a / (a + b)
    }

    /// Band profile `ψ_j(ξ) = Φ(2^{−(j+1)}ξ) − Φ(2^{−j}ξ)`, supported in `(2^j, 1.1·2^{j+1})`.
    pub fn band(j: u32, xi: f64) -> f64 {
        Self::cutoff(xi * 0.5f64.powi(j as i32 + 1)) - Self::cutoff(xi * 0.5f64.powi(j as i32))
    }

    /// Widened band cutoff, equal to 1 on the support of `ψ_j`.
    pub fn band_envelope(j: u32, xi: f64) -> f64 {
        Self::cutoff(xi * 0.5f64.powi(j as i32 + 2)) - Self::cutoff(xi * 2.0f64.powi(1 - j as i32))
    }

    /// True where `ψ_j(ξ) = 1` exactly, i.e. `1.1·2^j ≤ ξ ≤ 2^{j+1}`.
    pub fn on_plateau(j: u32, xi: f64) -> bool {
        Self::band(j, xi) == 1.0
    }
}

/// Multiply coefficients by `profile(2^{−m}√λ_n)`.
pub fn apply_multiplier<F: Fn(f64) -> f64>(f: &SpectralField, profile: F, m: i32) -> SpectralField {
    let scale = 2.0f64.powi(-m);
    f.map_eigen(|lam| Complex64::new(profile(scale * lam.sqrt()), 0.0))
}

/// A dyadic frequency band: member modes and profile values.
#[derive(Debug, Clone)]
pub struct DyadicBand {
    /// Band index; `None` denotes the low-frequency block `S_0`.
    pub j: Option<u32>,
    pub members: Vec<u32>,
    pub weights: Vec<f64>,
}

impl DyadicBand {
    fn build(basis: &EigenBasis, j: Option<u32>) -> Self {
        let mut members = Vec::new();
        let mut weights = Vec::new();
        for (pos, m) in basis.modes().iter().enumerate() {
            let xi = m.frequency();
            let w = match j {
                Some(j) => BumpFunction::band(j, xi),
                None => BumpFunction::cutoff(xi),
            };
            if w != 0.0 {
                members.push(pos as u32);
                weights.push(w);
            }
        }
        Self { j, members, weights }
    }

    /// `‖Δ_j f‖²` (or `‖S_0 f‖²`).
    pub fn norm_sq(&self, f: &SpectralField) -> f64 {
        let c = f.coeffs();
        self.members
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * w * c[p as usize].norm_sqr())
            .sum()
    }

    /// The band piece of `f` as a field.
    pub fn project(&self, f: &SpectralField) -> SpectralField {
        let mut out = SpectralField::zeros(f.basis());
        let c = f.coeffs();
        let o = out.coeffs_mut();
        for (&p, &w) in self.members.iter().zip(&self.weights) {
            o[p as usize] = c[p as usize] * w;
        }
        out
    }
}

/// Littlewood-Paley decomposition of a basis: `S_0` plus bands `Δ_0 … Δ_{J}`.
#[derive(Debug, Clone)]
pub struct LittlewoodPaley {
    j_max: u32,
    low: DyadicBand,
    bands: Vec<DyadicBand>,
}

impl LittlewoodPaley {
    /// Bands up to `j_max`; requires `2^{j_max} ≥ (10/11)·max √λ_n`.
    pub fn new(basis: &EigenBasis, j_max: u32) -> Result<Self> {
        let top = basis.max_eigenvalue().sqrt();
        if 2.0f64.powi(j_max as i32) < top * 10.0 / 11.0 {
            return Err(Error::BandCoverage {
                j_max,
                max_frequency: top,
            });
        }
        Ok(Self {
            j_max,
            low: DyadicBand::build(basis, None),
            bands: (0..=j_max).map(|j| DyadicBand::build(basis, Some(j))).collect(),
        })
    }

    /// Smallest admissible `J`.
    pub fn covering_index(basis: &EigenBasis) -> u32 {
        let top = basis.max_eigenvalue().sqrt() * 10.0 / 11.0;
        let mut j = 0;
        while 2.0f64.powi(j as i32) < top {
            j += 1;
        }
        j
    }

    pub fn covering(basis: &EigenBasis) -> Self {
        Self::new(basis, Self::covering_index(basis)).expect("covering index is admissible")
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    pub fn low(&self) -> &DyadicBand {
        &self.low
    }

    pub fn band(&self, j: u32) -> Option<&DyadicBand> {
        self.bands.get(j as usize)
    }

    pub fn bands(&self) -> &[DyadicBand] {
        &self.bands
    }

    /// `[S_0 f, Δ_0 f, …, Δ_J f]`.
    pub fn decompose(&self, f: &SpectralField) -> Vec<SpectralField> {
        std::iter::once(self.low.project(f))
            .chain(self.bands.iter().map(|b| b.project(f)))
            .collect()
    }

    /// `(‖S_0 f‖, [‖Δ_j f‖]_j)`.
    pub fn band_norms(&self, f: &SpectralField) -> (f64, Vec<f64>) {
        (
            self.low.norm_sq(f).sqrt(),
            self.bands.iter().map(|b| b.norm_sq(f).sqrt()).collect(),
        )
    }

    /// `ℓ^q` norm of `(‖S_0 f‖, λ_j ‖Δ_j f‖)` for band weights `λ_j`.
    pub fn weighted_norm<W: Fn(u32) -> f64>(&self, f: &SpectralField, weight: W, q: f64) -> f64 {
        let (low, bands) = self.band_norms(f);
        let terms = std::iter::once(low).chain(
            bands
                .iter()
                .enumerate()
                .map(|(j, &n)| weight(j as u32) * n),
        );
        if q.is_infinite() {
            terms.fold(0.0, f64::max)
        } else {
            terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }

    /// Besov norm `B^{s,q}_2`.
    pub fn besov_norm(&self, f: &SpectralField, s: f64, q: f64) -> f64 {
        self.weighted_norm(f, |j| 2.0f64.powf(j as f64 * s), q)
    }

    /// Sobolev norm `H^s = B^{s,2}_2`.
    pub fn sobolev_norm(&self, f: &SpectralField, s: f64) -> f64 {
        self.besov_norm(f, s, 2.0)
    }

    /// Log-Besov norm `B^{1,1}_{2,l}` with weights `2^j log^{1/2} max(j, 2)`.
    pub fn log_besov_norm(&self, f: &SpectralField) -> f64 {
        self.weighted_norm(f, log_besov_weight, 1.0)
    }
}

/// `λ_{j,1} = 2^j log^{1/2} j`, with the logarithm floored at `log 2` for `j ∈ {0, 1}`.
pub fn log_besov_weight(j: u32) -> f64 {
    2.0f64.powi(j as i32) * (j.max(2) as f64).ln().sqrt()
}

/// `[S_0 f, Δ_0 f, …, Δ_{j_max} f]`; rejects `j_max` that does not cover the basis.
pub fn lp_decompose(f: &SpectralField, j_max: u32) -> Result<Vec<SpectralField>> {
    Ok(LittlewoodPaley::new(f.basis(), j_max)?.decompose(f))
}

pub fn besov_norm(f: &SpectralField, s: f64, q: f64) -> f64 {
    f.basis().littlewood_paley().besov_norm(f, s, q)
}

pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    f.basis().littlewood_paley().sobolev_norm(f, s)
}

pub fn log_besov_norm(f: &SpectralField) -> f64 {
    f.basis().littlewood_paley().log_besov_norm(f)
}

/// `Q_l f = 2^{−l} ∇ e^{2^{−2l}Δ} f`, sampled on the basis grid.
pub fn q_operator(f: &SpectralField, l: i32) -> Result<Vec<PhysicalField>> {
    let s = 2.0f64.powi(-l);
    let smoothed = f.map_eigen(|lam| Complex64::new(s * (-s * s * lam).exp(), 0.0));
    f.basis().gradient(&smoothed)
}

/// Operator norm of `Q_l` on L² restricted to the basis: `sup_n 2^{−l}√λ_n e^{−2^{−2l}λ_n}`.
pub fn q_operator_norm(basis: &EigenBasis, l: i32) -> f64 {
    let s = 2.0f64.powi(-l);
    basis
        .modes()
        .iter()
        .map(|m| s * m.frequency() * (-s * s * m.eigenvalue).exp())
        .fold(0.0, f64::max)
}

/// `D_j`: inverse of `2^{−2j}(−Δ)` on the support of `ψ_j`, cut off smoothly outside,
/// so that `2^{−2j}(−Δ) D_j u = u` for band-`j` data.
pub fn d_operator(f: &SpectralField, j: u32) -> SpectralField {
    let scale = 4.0f64.powi(-(j as i32));
    f.map_eigen(|lam| {
        let env = BumpFunction::band_envelope(j, lam.sqrt());
        Complex64::new(if env == 0.0 { 0.0 } else { env / (scale * lam) }, 0.0)
    })
}

impl EigenBasis {
    /// The covering Littlewood-Paley decomposition, built once per basis.
    pub fn littlewood_paley(&self) -> &LittlewoodPaley {
        self.band_cache().get_or_init(|| LittlewoodPaley::covering(self))
    }
}

/// Convenience for callers holding an `Arc`.
pub fn bands_of(basis: &Arc<EigenBasis>) -> &LittlewoodPaley {
    basis.littlewood_paley()
}

#[cfg(test)]
mod tests;
