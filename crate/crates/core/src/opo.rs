//! Below-threshold optical parametric oscillator.
//!
//! Cavity bookkeeping (escape efficiency, linewidth, pump parameter), the
//! Gaussian resource states the OPO emits, and the sideband noise spectra seen
//! on a spectrum analyser.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Ket};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpoType {
    /// Single-polarisation degenerate emission: squeezed vacuum.
    #[serde(rename = "type-I", alias = "TypeI", alias = "I")]
    TypeI,
    /// Orthogonally polarised signal/idler pairs: two-mode squeezed vacuum.
    #[serde(rename = "type-II", alias = "TypeII", alias = "II")]
    TypeII,
}

/// Cavity and pump parameters of one OPO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpoConfig {
    /// Output-coupler transmission `T`.
    pub output_transmission: f64,
    /// Round-trip intracavity loss `L`.
    pub intracavity_loss: f64,
    pub fsr_hz: f64,
    pub pump_power_w: f64,
    pub threshold_power_w: f64,
    pub opo_type: OpoType,
}

impl OpoConfig {
    pub fn validate(&self) -> Result<()> {
        let (t, l) = (self.output_transmission, self.intracavity_loss);
        if !(t > 0.0 && t <= 1.0) || !(0.0..1.0).contains(&l) || t + l > 1.0 {
            return Err(Error::Domain(format!("invalid cavity coupling T = {t}, L = {l}")));
        }
        if !(self.fsr_hz > 0.0) {
            return Err(Error::Domain(format!("free spectral range must be positive, got {}", self.fsr_hz)));
        }
        if !(self.threshold_power_w > 0.0) || !(self.pump_power_w >= 0.0) {
            return Err(Error::Domain("pump and threshold powers must be non-negative".into()));
        }
        if self.pump_power_w >= self.threshold_power_w {
            return Err(Error::AboveThreshold(format!(
                "pump {} mW ≥ threshold {} mW",
                self.pump_power_w * 1e3,
                self.threshold_power_w * 1e3
            )));
        }
        Ok(())
    }

    pub fn escape_efficiency(&self) -> Result<f64> {
        escape_efficiency(self.output_transmission, self.intracavity_loss)
    }

    pub fn pump_parameter(&self) -> Result<f64> {
        pump_parameter(self.pump_power_w, self.threshold_power_w)
    }

    /// Cavity half-width at half-maximum in Hz.
    pub fn halfwidth_hz(&self) -> f64 {
        cavity_halfwidth(self.fsr_hz, self.output_transmission, self.intracavity_loss)
    }

    /// Half-width `γ` in rad/s, the decay constant of the emitted mode.
    pub fn halfwidth_rad_s(&self) -> f64 {
        2.0 * PI * self.halfwidth_hz()
    }

    /// Squeezing parameter of the effective single-mode resource, matched to
    /// the lossless zero-frequency spectrum: `e^{−2r} = ((1−σ)/(1+σ))²`.
    pub fn resource_squeezing_parameter(&self) -> Result<f64> {
        let sigma = self.pump_parameter()?;
        Ok(((1.0 + sigma) / (1.0 - sigma)).ln())
    }
}

/// `η_esc = T/(T+L)`.
pub fn escape_efficiency(transmission: f64, loss: f64) -> Result<f64> {
    if transmission < 0.0 || loss < 0.0 {
        return Err(Error::Domain(format!("negative coupling T = {transmission}, L = {loss}")));
    }
    let total = transmission + loss;
    if total == 0.0 {
        return Err(Error::Domain("T + L = 0: escape efficiency undefined".into()));
    }
    Ok(transmission / total)
}

/// `σ = √(P/P_th)`.
pub fn pump_parameter(pump_w: f64, threshold_w: f64) -> Result<f64> {
    if !(threshold_w > 0.0) || pump_w < 0.0 {
        return Err(Error::Domain(format!("invalid pump {pump_w} W / threshold {threshold_w} W")));
    }
    if pump_w >= threshold_w {
        return Err(Error::AboveThreshold(format!("pump {pump_w} W ≥ threshold {threshold_w} W")));
    }
    Ok((pump_w / threshold_w).sqrt())
}

/// Half width at half maximum (Hz) of a cavity with finesse `2π/(T+L)`.
pub fn cavity_halfwidth(fsr_hz: f64, transmission: f64, loss: f64) -> f64 {
    let finesse = 2.0 * PI / (transmission + loss);
    0.5 * fsr_hz / finesse
}

/// Full width (Hz) of a cavity given its finesse directly.
pub fn fwhm_from_finesse(fsr_hz: f64, finesse: f64) -> f64 {
    fsr_hz / finesse
}

/// Pure two-mode state, `coeffs[(s, i)] = ⟨s, i|ψ⟩` (signal rows, idler columns).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    pub coeffs: DMatrix<Complex64>,
}

impl TwoModeState {
    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Joint photon-number distribution `p(n_s, n_i)`.
    pub fn joint_probability(&self, s: usize, i: usize) -> f64 {
        self.coeffs[(s, i)].norm_sqr()
    }

    /// `Tr_idler |ψ⟩⟨ψ|` with idler weights `w_i` (all ones for the plain trace).
    pub(crate) fn reduced_signal_weighted(&self, idler_weights: &[f64]) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (i, &w) in idler_weights.iter().enumerate().take(self.coeffs.ncols()) {
            if w == 0.0 {
                continue;
            }
            let col = self.coeffs.column(i);
            out += (&col * col.adjoint()) * Complex64::new(w, 0.0);
        }
        out
    }

    pub fn reduced_signal(&self) -> DensityMatrix {
        let ones = vec![1.0; self.coeffs.ncols()];
        DensityMatrix::from_matrix_unchecked(self.reduced_signal_weighted(&ones))
    }
}

/// Two-mode squeezed vacuum `√(1−λ²) Σ λⁿ |n, n⟩`, truncated at `cutoff` and
/// renormalised.
pub fn tmsv_state(lambda: f64, cutoff: usize) -> Result<TwoModeState> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("TMSV parameter λ = {lambda} must lie in [0, 1)")));
    }
    let tail = lambda.powi(2 * (cutoff as i32 + 1));
    if tail >= 1e-8 {
        log::warn!("TMSV truncation at N = {cutoff} drops weight {tail:.2e}");
    }
    let dim = cutoff + 1;
    let mut coeffs = DMatrix::zeros(dim, dim);
    let mut amp = 1.0;
    let mut norm2 = 0.0;
    for n in 0..dim {
        coeffs[(n, n)] = Complex64::new(amp, 0.0);
        norm2 += amp * amp;
        amp *= lambda;
    }
    coeffs /= Complex64::new(norm2.sqrt(), 0.0);
    Ok(TwoModeState { coeffs })
}

/// Fock amplitudes of `S(r)|0⟩`, squeezed along `x` (θ = 0):
/// `c_{2m} = (−tanh r)^m √((2m)!)/(2^m m!) / √(cosh r)`, odd terms zero.
pub fn squeezed_vacuum_ket(r: f64, cutoff: usize) -> Result<Ket> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("squeezing parameter r = {r} must be ≥ 0")));
    }
    let t = r.tanh();
    if cutoff > 0 && t.powi(cutoff as i32) >= 1e-8 {
        log::warn!("squeezed vacuum r = {r} truncated at N = {cutoff}: tail tanh^N = {:.2e}", t.powi(cutoff as i32));
    }
    let mut ket = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    let mut c = 1.0 / r.cosh().sqrt();
    ket[0] = Complex64::new(c, 0.0);
    let mut m = 1;
    while 2 * m <= cutoff {
        // c_{2m}/c_{2m−2} = −tanh r · √((2m−1)/(2m))
        c *= -t * ((2 * m - 1) as f64 / (2 * m) as f64).sqrt();
        ket[2 * m] = Complex64::new(c, 0.0);
        m += 1;
    }
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(ket.into_iter().map(|z| z / norm).collect())
}

pub fn squeezed_vacuum_state(r: f64, cutoff: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_pure(&squeezed_vacuum_ket(r, cutoff)?))
}

/// `r` giving `squeezing_db` dB of pure-state squeezing below shot noise.
pub fn squeezing_parameter_from_db(squeezing_db: f64) -> f64 {
    squeezing_db * 10f64.ln() / 20.0
}

/// Quadrature noise at one analysis frequency, in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingSpectrumPoint {
    pub frequency_hz: f64,
    pub squeezed: f64,
    pub anti_squeezed: f64,
}

impl SqueezingSpectrumPoint {
    pub fn squeezed_db(&self) -> f64 {
        10.0 * self.squeezed.log10()
    }

    pub fn anti_squeezed_db(&self) -> f64 {
        10.0 * self.anti_squeezed.log10()
    }
}

/// Below-threshold output spectrum
/// `S∓(Ω) = 1 ∓ η·4σ / ((1 ± σ)² + (Ω/γ)²)`, with `γ` the half-width in Hz.
pub fn squeezing_spectrum(
    frequency_hz: f64,
    sigma: f64,
    halfwidth_hz: f64,
    efficiency: f64,
) -> Result<SqueezingSpectrumPoint> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::AboveThreshold(format!("pump parameter σ = {sigma} must lie in [0, 1)")));
    }
    if !(halfwidth_hz > 0.0) || !(0.0..=1.0).contains(&efficiency) {
        return Err(Error::Domain(format!("invalid γ = {halfwidth_hz} Hz or η = {efficiency}")));
    }
    let w2 = (frequency_hz / halfwidth_hz).powi(2);
    let gain = efficiency * 4.0 * sigma;
    Ok(SqueezingSpectrumPoint {
        frequency_hz,
        squeezed: 1.0 - gain / ((1.0 + sigma).powi(2) + w2),
        anti_squeezed: 1.0 + gain / ((1.0 - sigma).powi(2) + w2),
    })
}

/// Loss equivalent to an electronic-noise clearance of `clearance_db` below shot noise.
pub fn electronic_noise_equivalent_loss(clearance_db: f64) -> f64 {
    10f64.powf(-clearance_db / 10.0)
}

/// Homodyne efficiency from fringe visibility: mismatch enters quadratically.
pub fn visibility_to_efficiency(visibility: f64) -> f64 {
    visibility * visibility
}
