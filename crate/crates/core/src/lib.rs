//! Spectral solver for the linear and cubic Schrödinger equation on Dirichlet
//! domains (the cube `[0,π]³` and radial fields on the unit ball), together
//! with a harness that measures dyadic bilinear, virial, trace and
//! log-Sobolev estimates.

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod driver;
pub mod error;
pub mod estimates;
pub mod flow;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod virial;

pub use error::{Error, Result};
