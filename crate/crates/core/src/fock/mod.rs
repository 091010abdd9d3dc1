//! Truncated Fock-space numerics.
//!
//! States live in the span of `|0⟩ … |N⟩`. Quadratures follow
//! [`QuadratureConvention`]: `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, `[x, p] = i`.

mod density;
mod metrics;
mod wavefunction;
mod wigner;

pub use density::{annihilation, DensityMatrix, Normalized};
pub use metrics::{fidelity, fidelity_with_state, photon_statistics, Padding, PhotonStatistics};
pub use wavefunction::{
    hermite_wavefunction, hermite_wavefunction_capped, quadrature_pdf, wavefunction_ladder,
    DEFAULT_MAX_PHOTON,
};
pub use wigner::{wigner, wigner_point, WignerGrid};

/// Pure state amplitudes in the Fock basis.
pub type Ket = Vec<num_complex::Complex64>;

/// The one quadrature convention used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConvention;

impl QuadratureConvention {
    /// Shot-noise (vacuum) quadrature variance.
    pub const VACUUM_VARIANCE: f64 = 0.5;
    /// `[x, p] = i · COMMUTATOR`.
    pub const COMMUTATOR: f64 = 1.0;
    /// Integration window used for quadrature densities.
    pub const X_RANGE: (f64, f64) = (-12.0, 12.0);
    /// Default step for runtime integrals.
    pub const DX: f64 = 1e-2;

    /// Express a variance in dB relative to shot noise.
    pub fn to_db(variance: f64) -> f64 {
        10.0 * (variance / Self::VACUUM_VARIANCE).log10()
    }
}
