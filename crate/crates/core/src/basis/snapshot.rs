//! Field snapshots: a JSON descriptor plus a raw little-endian array of
//! interleaved `(re, im)` f64 pairs in mode order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DomainSpec, EigenBasis, SpectralField, ORDERING_VERSION};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "dnls-field";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotDescriptor {
    pub format: String,
    pub domain: DomainSpec,
    /// True when the field lives on the grid-resolved basis (all `q·N − 1` modes per axis).
    pub resolved: bool,
    pub n_axis: usize,
    pub ordering_version: u32,
    pub mode_count: usize,
    pub time: Option<f64>,
}

impl SnapshotDescriptor {
    pub fn for_field(f: &SpectralField, time: Option<f64>) -> Self {
        let b = f.basis();
        Self {
            format: FORMAT_TAG.to_string(),
            domain: b.spec(),
            resolved: b.is_resolved(),
            n_axis: b.n_axis(),
            ordering_version: ORDERING_VERSION,
            mode_count: b.len(),
            time,
        }
    }

    /// Rebuild the basis this descriptor refers to.
    pub fn basis(&self) -> Result<Arc<EigenBasis>> {
        if self.format != FORMAT_TAG {
            return Err(Error::Snapshot(format!("unknown format tag {:?}", self.format)));
        }
        if self.ordering_version != ORDERING_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported mode ordering version {}",
                self.ordering_version
            )));
        }
        let base = EigenBasis::new(self.domain)?;
        let basis = if self.resolved { base.resolved() } else { base };
        if basis.len() != self.mode_count || basis.n_axis() != self.n_axis {
            return Err(Error::Snapshot("descriptor does not match its basis".into()));
        }
        Ok(basis)
    }
}

pub fn encode_coefficients(coeffs: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coeffs.len() * 16);
    for c in coeffs {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_coefficients(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Snapshot(format!(
            "payload length {} is not a multiple of 16",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|ch| {
            let re = f64::from_le_bytes(ch[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(ch[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

fn paths(prefix: &Path) -> (PathBuf, PathBuf) {
    (prefix.with_extension("json"), prefix.with_extension("bin"))
}

/// Write `<prefix>.json` and `<prefix>.bin`.
pub fn write_snapshot(f: &SpectralField, prefix: &Path, time: Option<f64>) -> Result<(PathBuf, PathBuf)> {
    let (desc_path, bin_path) = paths(prefix);
    let desc = SnapshotDescriptor::for_field(f, time);
    fs::write(&desc_path, serde_json::to_string_pretty(&desc)?)?;
    fs::write(&bin_path, encode_coefficients(f.coeffs()))?;
    Ok((desc_path, bin_path))
}

pub fn read_snapshot(prefix: &Path) -> Result<(SnapshotDescriptor, SpectralField)> {
    let (desc_path, bin_path) = paths(prefix);
    let desc: SnapshotDescriptor = serde_json::from_str(&fs::read_to_string(desc_path)?)?;
    let basis = desc.basis()?;
    let coeffs = decode_coefficients(&fs::read(bin_path)?)?;
    let field = SpectralField::new(basis, coeffs)?;
    Ok((desc, field))
}
