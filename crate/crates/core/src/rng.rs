//! Deterministic random streams and random spectral data.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::{EigenBasis, Mode, SpectralField};
use crate::spectral::BumpFunction;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a tag path
/// (e.g. `[j, k, trial]`), so results do not depend on evaluation order.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x5851_F42D))))
}

pub fn stream(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

/// Standard complex Gaussian (independent real and imaginary parts).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Independent complex Gaussian coefficients on the modes selected by
/// `select`, zero elsewhere; L²-normalized when any mode is selected.
pub fn random_field<R, F>(basis: &Arc<EigenBasis>, rng: &mut R, select: F) -> SpectralField
where
    R: Rng + ?Sized,
    F: Fn(&Mode) -> bool,
{
    let mut f = SpectralField::zeros(basis);
    for (m, c) in basis.modes().iter().zip(f.coeffs_mut()) {
        if select(m) {
            *c = complex_gaussian(rng);
        }
    }
    let norm = f.norm();
    if norm > 0.0 {
        f = f.scaled(Complex64::new(1.0 / norm, 0.0));
    }
    f
}

/// A normalized random field on the plateau modes of dyadic band `j`
/// (`ψ_j(√λ) = 1`), so it is exactly its own `Δ_j` piece.
pub fn band_field<R: Rng + ?Sized>(basis: &Arc<EigenBasis>, j: u32, rng: &mut R) -> SpectralField {
    random_field(basis, rng, |m| BumpFunction::on_plateau(j, m.frequency()))
}
