//! Photon-loss channel, its inverse, and the detection-efficiency budget.
//!
//! Loss at efficiency η has Kraus operators
//! `A_k = Σ_n √(C(n,k) η^{n−k} (1−η)^k) |n−k⟩⟨n|`. Because it only lowers
//! photon number, the truncated channel is exact and upper-triangular in each
//! band `n − m = const`, which makes inversion a back-substitution.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::numeric::ln_binomial;
use crate::opo::{electronic_noise_equivalent_loss, visibility_to_efficiency};

/// Inversion yielding more clipped weight than this is flagged.
pub const CLIP_WARNING_MASS: f64 = 0.05;

/// `√(C(n,k) η^{n−k} (1−η)^k)`: amplitude for losing `k` of `n` photons.
pub(crate) fn kraus_amplitude(n: usize, k: usize, eta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let prob = (ln_binomial(n, k)).exp() * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32);
    prob.sqrt()
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("efficiency {eta} outside [0, 1]")));
    }
    Ok(())
}

/// One Kraus branch `A_k X A_k†` (exactly `k` photons lost).
pub(crate) fn loss_branch(x: &DMatrix<Complex64>, eta: f64, k: usize) -> DMatrix<Complex64> {
    let d = x.nrows();
    let mut out = DMatrix::zeros(d, d);
    if k >= d {
        return out;
    }
    let amps: Vec<f64> = (0..d).map(|n| kraus_amplitude(n, k, eta)).collect();
    for m in k..d {
        for n in k..d {
            out[(m - k, n - k)] = x[(m, n)] * (amps[m] * amps[n]);
        }
    }
    out
}

/// Apply the loss channel to an arbitrary operator (same map as on states).
pub(crate) fn loss_apply_matrix(x: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let d = x.nrows();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        out += loss_branch(x, eta, k);
    }
    out
}

/// Heisenberg-picture (adjoint) loss map `Σ_k A_k† X A_k`.
pub fn loss_adjoint(x: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let d = x.nrows();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let amps: Vec<f64> = (0..d).map(|n| kraus_amplitude(n, k, eta)).collect();
        for m in k..d {
            for n in k..d {
                out[(m, n)] += x[(m - k, n - k)] * (amps[m] * amps[n]);
            }
        }
    }
    out
}

/// Photon loss with efficiency `eta`.
pub fn loss_apply(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    check_efficiency(eta)?;
    rho.check_normalized()?;
    Ok(DensityMatrix::from_matrix_unchecked(loss_apply_matrix(rho.matrix(), eta)))
}

/// Output of [`loss_invert`].
#[derive(Debug, Clone)]
pub struct LossInversion {
    pub state: DensityMatrix,
    pub clipped_mass: f64,
    /// Set when `clipped_mass` exceeds [`CLIP_WARNING_MASS`].
    pub warning: bool,
}

/// Undo loss `eta` exactly within the cutoff, then renormalise and clip to
/// the PSD cone. Refuses `eta ≤ 0.5`, where inversion amplifies noise without
/// bound.
pub fn loss_invert(measured: &DensityMatrix, eta: f64, cutoff: usize) -> Result<LossInversion> {
    check_efficiency(eta)?;
    if eta <= 0.5 {
        return Err(Error::EfficiencyRefused(eta));
    }
    measured.check_normalized()?;
    let rho = measured.resized(cutoff + 1);
    let d = rho.dim();
    let src = rho.matrix();
    let mut out: DMatrix<Complex64> = DMatrix::zeros(d, d);
    for offset in 0..d {
        for m in (0..(d - offset)).rev() {
            let n = m + offset;
            let mut rhs = src[(m, n)];
            for k in 1..(d - n) {
                rhs -= out[(m + k, n + k)] * (kraus_amplitude(m + k, k, eta) * kraus_amplitude(n + k, k, eta));
            }
            let diag = kraus_amplitude(m, 0, eta) * kraus_amplitude(n, 0, eta);
            out[(m, n)] = rhs / diag;
            if offset > 0 {
                out[(n, m)] = out[(m, n)].conj();
            }
        }
    }
    let normalized = DensityMatrix::from_matrix_unchecked(out).normalize()?;
    let warning = normalized.clipped_mass > CLIP_WARNING_MASS;
    if warning {
        log::warn!("loss inversion at η = {eta} clipped {:.3} of spectral weight", normalized.clipped_mass);
    }
    Ok(LossInversion { state: normalized.state, clipped_mass: normalized.clipped_mass, warning })
}

/// Loss channel as a value; composes multiplicatively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    pub efficiency: f64,
}

impl LossChannel {
    pub fn new(efficiency: f64) -> Result<Self> {
        check_efficiency(efficiency)?;
        Ok(Self { efficiency })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        loss_apply(rho, self.efficiency)
    }

    pub fn then(&self, next: &LossChannel) -> LossChannel {
        LossChannel { efficiency: self.efficiency * next.efficiency }
    }
}

/// Factorised homodyne detection efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionBudget {
    pub visibility: f64,
    pub photodiode_efficiency: f64,
    pub propagation_efficiency: f64,
    /// Shot-noise clearance above electronic noise, dB.
    pub electronic_clearance_db: f64,
    /// When set, replaces the product of the factors above.
    pub overall_efficiency: Option<f64>,
}

impl Default for DetectionBudget {
    fn default() -> Self {
        Self {
            visibility: 0.99,
            photodiode_efficiency: 0.92,
            propagation_efficiency: 0.95,
            electronic_clearance_db: 20.0,
            overall_efficiency: None,
        }
    }
}

/// Per-factor provenance of the combined detection efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBreakdown {
    pub mode_matching: f64,
    pub photodiode: f64,
    pub propagation: f64,
    pub electronic: f64,
    pub product: f64,
    pub overridden: bool,
    pub total: f64,
}

impl DetectionBudget {
    pub fn breakdown(&self) -> EfficiencyBreakdown {
        let mode_matching = visibility_to_efficiency(self.visibility);
        let electronic = 1.0 - electronic_noise_equivalent_loss(self.electronic_clearance_db);
        let product = mode_matching * self.photodiode_efficiency * self.propagation_efficiency * electronic;
        EfficiencyBreakdown {
            mode_matching,
            photodiode: self.photodiode_efficiency,
            propagation: self.propagation_efficiency,
            electronic,
            product,
            overridden: self.overall_efficiency.is_some(),
            total: self.overall_efficiency.unwrap_or(product),
        }
    }

    pub fn efficiency(&self) -> f64 {
        self.breakdown().total
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [self.visibility, self.photodiode_efficiency, self.propagation_efficiency];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("detection factors must lie in [0, 1]".into()));
        }
        if !(self.electronic_clearance_db > 0.0) {
            return Err(Error::Config("electronic_clearance_db must be positive".into()));
        }
        if let Some(eta) = self.overall_efficiency {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Config(format!("overall_efficiency {eta} outside [0, 1]")));
            }
        }
        Ok(())
    }
}
