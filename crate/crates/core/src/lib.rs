//! Simulation and reconstruction toolkit for heralded non-Gaussian light.
//!
//! The crate follows one conditional-preparation experiment end to end:
//!
//! - [`opo`]: below-threshold OPO resource states and squeezing spectra.
//! - [`herald`]: on/off click detection, heralded single photons, photon subtraction.
//! - [`channels`]: photon loss and its inverse.
//! - [`homodyne`]: quadrature sampling, photocurrent records and temporal modes.
//! - [`tomography`]: maximum-likelihood reconstruction and reports.
//! - [`pipeline`]: config-driven batch commands used by the CLI.
//!
//! Every module shares the quadrature convention in [`fock::QuadratureConvention`]:
//! `x = (a + a†)/√2`, so the vacuum has variance 1/2.

pub mod channels;
pub mod config;
pub mod error;
pub mod fock;
pub mod herald;
pub mod homodyne;
pub mod numeric;
pub mod opo;
pub mod pipeline;
pub mod rng;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::DensityMatrix;

/// Version string written into every output directory.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
