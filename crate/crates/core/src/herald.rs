//! Conditional preparation with an on/off click detector.
//!
//! Two schemes share the same detector model:
//! heralding one half of a two-mode squeezed vacuum (single photons), and
//! tapping a squeezed vacuum on a weak beam splitter (photon subtraction).
//! False clicks (dark counts and leakage of non-degenerate cavity modes)
//! herald nothing, so they mix the unconditioned state back in with weight `w`.
//!
//! Beam-splitter convention: real amplitudes, `√(1−R)` on the kept mode and
//! `√R` into the tap.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{loss_apply_matrix, loss_branch};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Ket};
use crate::numeric::golden_max;
use crate::opo::TwoModeState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldConfig {
    /// Tap beam-splitter reflectivity `R` (photon subtraction only).
    pub tap_reflectivity: f64,
    /// Heralding-path efficiency: filters times detector quantum efficiency.
    pub herald_efficiency: f64,
    /// Fraction `w` of clicks not caused by degenerate-mode photons.
    pub false_click_fraction: f64,
    /// Filter rejection of the non-degenerate cavity modes, dB.
    pub rejection_db: f64,
}

impl Default for HeraldConfig {
    fn default() -> Self {
        Self { tap_reflectivity: 0.03, herald_efficiency: 0.05, false_click_fraction: 2e-4, rejection_db: 25.0 }
    }
}

/// False-click fraction `w = R_false/(R_false + R_true)` where
/// `R_false = dark + leakage` and each leaking mode pair contributes
/// `R_true · 10^{−rejection/10}`.
pub fn false_click_fraction(dark_rate_hz: f64, click_rate_hz: f64, rejection_db: f64, leaking_modes: u32) -> f64 {
    let leakage = click_rate_hz * leaking_modes as f64 * 10f64.powf(-rejection_db / 10.0);
    let false_rate = dark_rate_hz + leakage;
    if false_rate + click_rate_hz == 0.0 {
        return 0.0;
    }
    false_rate / (false_rate + click_rate_hz)
}

impl HeraldConfig {
    pub fn validate(&self) -> Result<()> {
        let fractions = [self.tap_reflectivity, self.herald_efficiency, self.false_click_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Domain(format!("herald fractions must lie in [0, 1]: {fractions:?}")));
        }
        if self.tap_reflectivity > 0.5 {
            return Err(Error::Domain(format!("tap reflectivity {} exceeds 0.5", self.tap_reflectivity)));
        }
        Ok(())
    }
}

/// Diagonal of the on/off click POVM, `1 − (1−η)^n` for `n = 0..=cutoff`.
pub fn click_povm_element(efficiency: f64, cutoff: usize) -> Vec<f64> {
    (0..=cutoff).map(|n| 1.0 - (1.0 - efficiency).powi(n as i32)).collect()
}

/// Diagonal of the complementary no-click element.
pub fn no_click_povm_element(efficiency: f64, cutoff: usize) -> Vec<f64> {
    (0..=cutoff).map(|n| (1.0 - efficiency).powi(n as i32)).collect()
}

/// Conditional state and the probability that a click occurs.
#[derive(Debug, Clone)]
pub struct HeraldOutcome {
    pub state: DensityMatrix,
    /// Total click probability per trial, including false clicks.
    pub success_probability: f64,
}

fn mix_false_clicks(
    conditioned: DMatrix<Complex64>,
    true_probability: f64,
    reference: DMatrix<Complex64>,
    w: f64,
) -> Result<HeraldOutcome> {
    if true_probability <= 0.0 && w == 0.0 {
        return Err(Error::NoHerald);
    }
    let state = if true_probability <= 0.0 {
        reference
    } else {
        conditioned * Complex64::new((1.0 - w) / true_probability, 0.0) + reference * Complex64::new(w, 0.0)
    };
    let success_probability = if w < 1.0 { (true_probability / (1.0 - w)).min(1.0) } else { 1.0 };
    Ok(HeraldOutcome { state: DensityMatrix::from_matrix_unchecked(state).renormalized()?, success_probability })
}

/// Click on the idler of a two-mode state and keep the signal.
pub fn herald_single_photon(resource: &TwoModeState, cfg: &HeraldConfig) -> Result<HeraldOutcome> {
    cfg.validate()?;
    let click = click_povm_element(cfg.herald_efficiency, resource.coeffs.ncols() - 1);
    let conditioned = resource.reduced_signal_weighted(&click);
    let p_true = conditioned.trace().re;
    let reference = resource.reduced_signal().into_matrix();
    mix_false_clicks(conditioned, p_true, reference, cfg.false_click_fraction)
}

/// Probability of a genuine click when subtracting from `rho`.
pub fn subtraction_probability(rho: &DensityMatrix, cfg: &HeraldConfig) -> Result<f64> {
    Ok(subtraction_branches(rho, cfg)?.1)
}

fn subtraction_branches(rho: &DensityMatrix, cfg: &HeraldConfig) -> Result<(DMatrix<Complex64>, f64)> {
    cfg.validate()?;
    rho.check_normalized()?;
    let transmission = 1.0 - cfg.tap_reflectivity;
    let click = click_povm_element(cfg.herald_efficiency, rho.cutoff());
    let d = rho.dim();
    let mut conditioned = DMatrix::zeros(d, d);
    for (k, &weight) in click.iter().enumerate().skip(1) {
        if weight > 0.0 {
            conditioned += loss_branch(rho.matrix(), transmission, k) * Complex64::new(weight, 0.0);
        }
    }
    let p = conditioned.trace().re;
    Ok((conditioned, p))
}

/// Tap `R` of the light onto an on/off detector and keep the transmitted
/// mode on a click. False clicks admix the tapped-but-unconditioned state.
pub fn subtract_photon(rho: &DensityMatrix, cfg: &HeraldConfig) -> Result<HeraldOutcome> {
    let (conditioned, p_true) = subtraction_branches(rho, cfg)?;
    let reference = loss_apply_matrix(rho.matrix(), 1.0 - cfg.tap_reflectivity);
    mix_false_clicks(conditioned, p_true, reference, cfg.false_click_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatParity {
    Odd,
    Even,
}

/// Coherent-state superposition `|α e^{iφ}⟩ ∓ |−α e^{iφ}⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CssTarget {
    pub amplitude: f64,
    /// Orientation in phase space; `φ` and `φ + π` give the same state.
    pub phase: f64,
    pub parity: CatParity,
}

impl CssTarget {
    /// Fock amplitudes up to `cutoff`, normalised over the full (untruncated)
    /// cat so overlaps with truncated states are exact.
    pub fn ket(&self, cutoff: usize) -> Ket {
        let a2 = self.amplitude * self.amplitude;
        let keep = |n: usize| match self.parity {
            CatParity::Odd => n % 2 == 1,
            CatParity::Even => n % 2 == 0,
        };
        if a2 == 0.0 {
            // Small-amplitude limits: |1⟩ for odd, |0⟩ for even.
            let level = if self.parity == CatParity::Odd { 1 } else { 0 };
            return (0..=cutoff)
                .map(|n| Complex64::new(if n == level { 1.0 } else { 0.0 }, 0.0))
                .collect();
        }
        let norm2 = match self.parity {
            CatParity::Odd => a2.sinh(),
            CatParity::Even => a2.cosh(),
        };
        let mut coeff = 1.0 / norm2.sqrt();
        let mut out = Vec::with_capacity(cutoff + 1);
        for n in 0..=cutoff {
            if n > 0 {
                coeff *= self.amplitude / (n as f64).sqrt();
            }
            let c = if keep(n) { coeff } else { 0.0 };
            out.push(Complex64::from_polar(c, n as f64 * self.phase));
        }
        out
    }
}

/// Result of [`best_css_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CssFit {
    pub target: CssTarget,
    pub fidelity: f64,
    /// The optimum sits at the lower end of the amplitude scan (e.g. for |1⟩).
    pub at_lower_edge: bool,
}

const ALPHA_MIN: f64 = 0.01;
const ALPHA_MAX: f64 = 3.0;
const ALPHA_STEP: f64 = 0.01;
const PHASE_STEPS: usize = 180;

fn cat_overlap(rho: &DensityMatrix, target: &CssTarget) -> f64 {
    let ket = target.ket(rho.cutoff());
    let m = rho.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, ci) in ket.iter().enumerate() {
        if ci.norm_sqr() == 0.0 {
            continue;
        }
        for (j, cj) in ket.iter().enumerate() {
            acc += ci.conj() * m[(i, j)] * cj;
        }
    }
    acc.re
}

/// Best coherent-state-superposition fit of the given parity: grid scan over
/// amplitude `[0.01, 3]` (step 0.01) and orientation, then golden-section
/// refinement of both to 1e-4.
pub fn best_css_fit(rho: &DensityMatrix, parity: CatParity) -> CssFit {
    let n_alpha = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize + 1;
    let mut best = (ALPHA_MIN, 0.0, f64::NEG_INFINITY);
    for ia in 0..n_alpha {
        let amplitude = ALPHA_MIN + ia as f64 * ALPHA_STEP;
        for ip in 0..PHASE_STEPS {
            let phase = ip as f64 * PI / PHASE_STEPS as f64;
            let f = cat_overlap(rho, &CssTarget { amplitude, phase, parity });
            if f > best.2 {
                best = (amplitude, phase, f);
            }
        }
    }
    let (alpha0, phase0, _) = best;
    let at = |amplitude: f64, phase: f64| cat_overlap(rho, &CssTarget { amplitude, phase, parity });
    let lo = (alpha0 - ALPHA_STEP).max(ALPHA_MIN);
    let hi = (alpha0 + ALPHA_STEP).min(ALPHA_MAX);
    let (alpha, _) = golden_max(|a| at(a, phase0), lo, hi, 1e-4);
    let dphi = PI / PHASE_STEPS as f64;
    let (phase, _) = golden_max(|p| at(alpha, p), phase0 - dphi, phase0 + dphi, 1e-4);
    let phase = phase.rem_euclid(PI);
    let mut fit = CssFit {
        target: CssTarget { amplitude: alpha, phase, parity },
        fidelity: at(alpha, phase).clamp(0.0, 1.0),
        at_lower_edge: false,
    };
    if fit.fidelity < best.2 {
        fit.target = CssTarget { amplitude: alpha0, phase: phase0, parity };
        fit.fidelity = best.2.clamp(0.0, 1.0);
    }
    fit.at_lower_edge = fit.target.amplitude <= ALPHA_MIN + ALPHA_STEP;
    fit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fidelity_with_state, photon_statistics, Padding};
    use crate::opo::{squeezed_vacuum_ket, squeezed_vacuum_state, tmsv_state};

    const R_3DB: f64 = 0.346_573_590_279_972_6;

    fn cfg(r: f64, eta: f64, w: f64) -> HeraldConfig {
        HeraldConfig { tap_reflectivity: r, herald_efficiency: eta, false_click_fraction: w, rejection_db: 25.0 }
    }

    #[test]
    fn click_povm_examples() {
        let ideal = click_povm_element(1.0, 4);
        assert_eq!(ideal, vec![0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(click_povm_element(0.0, 4).iter().all(|&p| p == 0.0));
        assert!((click_povm_element(0.1, 3)[2] - 0.19).abs() < 1e-15);
        let none = no_click_povm_element(0.3, 5);
        for (a, b) in click_povm_element(0.3, 5).iter().zip(&none) {
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn false_click_rate_formula() {
        let w = false_click_fraction(5.0, 25e3, 25.0, 0);
        assert!((w - 5.0 / 25005.0).abs() < 1e-15);
        assert!((w - 2e-4).abs() < 1e-7);
        assert!(false_click_fraction(5.0, 25e3, 25.0, 10) > w);
    }

    #[test]
    fn weak_click_two_photon_ratio() {
        let lambda: f64 = 0.1118;
        let psi = tmsv_state(lambda, 12).unwrap();
        let out = herald_single_photon(&psi, &cfg(0.03, 1e-4, 0.0)).unwrap();
        let p = out.state.populations();
        assert!((p[2] / p[1] - 2.0 * lambda * lambda).abs() < 1e-5);
        assert!(p[0].abs() < 1e-15);
        assert!((out.state.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn heralded_state_limits() {
        let psi = tmsv_state(1e-6, 8).unwrap();
        let out = herald_single_photon(&psi, &cfg(0.03, 0.4, 0.0)).unwrap();
        assert!((out.state.populations()[1] - 1.0).abs() < 1e-10);
        let psi = tmsv_state(0.3, 20).unwrap();
        let dark = herald_single_photon(&psi, &cfg(0.03, 0.05, 1.0)).unwrap();
        assert!((dark.state.matrix() - psi.reduced_signal().matrix()).norm() < 1e-12);
        let vac = tmsv_state(0.0, 5).unwrap();
        assert!(matches!(herald_single_photon(&vac, &cfg(0.03, 0.05, 0.0)), Err(Error::NoHerald)));
    }

    #[test]
    fn two_photon_ratio_monotone_in_lambda() {
        let ratios: Vec<f64> = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
            .iter()
            .map(|&l| {
                let out = herald_single_photon(&tmsv_state(l, 20).unwrap(), &HeraldConfig::default()).unwrap();
                let p = out.state.populations();
                p[2] / p[1]
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn conditional_tmsv_state_is_diagonal() {
        let psi = tmsv_state(0.2, 15).unwrap();
        for eta in [0.01, 0.3, 1.0] {
            let out = herald_single_photon(&psi, &cfg(0.03, eta, 0.0)).unwrap();
            let m = out.state.matrix();
            assert!((m - DMatrix::from_diagonal(&m.diagonal())).norm() < 1e-15);
        }
    }

    #[test]
    fn false_click_mixing_is_affine() {
        let sv = squeezed_vacuum_state(R_3DB, 24).unwrap();
        let c0 = subtract_photon(&sv, &cfg(0.03, 0.05, 0.0)).unwrap().state;
        let reference = DensityMatrix::from_matrix_unchecked(loss_apply_matrix(sv.matrix(), 0.97));
        for w in [0.01, 0.2, 0.7] {
            let cw = subtract_photon(&sv, &cfg(0.03, 0.05, w)).unwrap().state;
            let expect = c0.mix(&reference, w).unwrap();
            assert!((cw.matrix() - expect.matrix()).norm() < 1e-12);
        }
        let psi = tmsv_state(0.15, 15).unwrap();
        let s0 = herald_single_photon(&psi, &cfg(0.0, 0.05, 0.0)).unwrap().state;
        let sw = herald_single_photon(&psi, &cfg(0.0, 0.05, 0.3)).unwrap().state;
        let expect = s0.mix(&psi.reduced_signal(), 0.3).unwrap();
        assert!((sw.matrix() - expect.matrix()).norm() < 1e-12);
    }

    #[test]
    fn subtraction_flips_parity() {
        // Two-photon subtraction leaves even weight ≈ R⟨a†²a²⟩/⟨n⟩ = R(3⟨n⟩ + 1)
        // for squeezed vacuum; the parity flip is exact only in the R → 0 limit.
        for r in [0.1, 0.35, 0.6] {
            let sv = squeezed_vacuum_state(r, 40).unwrap();
            let leading = 3.0 * r.sinh().powi(2) + 1.0;
            assert!((photon_statistics(&sv).parity - 1.0).abs() < 1e-12);
            let mut last = f64::INFINITY;
            for tap in [1e-2, 1e-4, 1e-6, 1e-11] {
                let out = subtract_photon(&sv, &cfg(tap, 0.05, 0.0)).unwrap();
                let even = photon_statistics(&out.state).even_weight();
                assert!(even <= 1.05 * leading * tap, "r = {r}, R = {tap}: even weight {even}");
                assert!(even < last);
                last = even;
            }
            let out = subtract_photon(&sv, &cfg(1e-11, 0.05, 0.0)).unwrap();
            assert!((photon_statistics(&out.state).parity + 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_tap_approaches_annihilation() {
        let ket = squeezed_vacuum_ket(R_3DB, 30).unwrap();
        let mut target: Vec<Complex64> = (0..30).map(|n| ket[n + 1] * ((n + 1) as f64).sqrt()).collect();
        target.push(Complex64::new(0.0, 0.0));
        let sv = DensityMatrix::from_pure(&ket);
        let out = subtract_photon(&sv, &cfg(1e-6, 0.05, 0.0)).unwrap();
        assert!(fidelity_with_state(&out.state, &target, Padding::Strict).unwrap() > 1.0 - 1e-5);
    }

    #[test]
    fn vacuum_cannot_be_subtracted() {
        let vac = DensityMatrix::vacuum(6);
        assert_eq!(subtraction_probability(&vac, &cfg(0.03, 0.05, 0.0)).unwrap(), 0.0);
        assert!(matches!(subtract_photon(&vac, &cfg(0.03, 0.05, 0.0)), Err(Error::NoHerald)));
        let sv = squeezed_vacuum_state(0.3, 20).unwrap();
        assert_eq!(subtraction_probability(&sv, &cfg(0.0, 0.05, 0.0)).unwrap(), 0.0);
        assert!(subtract_photon(&sv, &cfg(0.6, 0.05, 0.0)).is_err());
    }

    #[test]
    fn cat_ket_normalisation() {
        for parity in [CatParity::Odd, CatParity::Even] {
            let ket = CssTarget { amplitude: 1.1, phase: 0.4, parity }.ket(60);
            let n2: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
            assert!((n2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn css_fit_examples() {
        let one = best_css_fit(&DensityMatrix::fock(1, 11), CatParity::Odd);
        assert!(one.at_lower_edge);
        assert!(one.fidelity > 0.9999);
        let vac = best_css_fit(&DensityMatrix::vacuum(11), CatParity::Odd);
        assert!(vac.fidelity < 1e-12);
        // â S(r)|0⟩, the ideal photon-subtracted squeezed vacuum.
        let ket = squeezed_vacuum_ket(R_3DB, 40).unwrap();
        let sub: Vec<Complex64> = (0..40).map(|n| ket[n + 1] * ((n + 1) as f64).sqrt()).collect();
        let ideal = DensityMatrix::from_pure(&sub);
        let fit = best_css_fit(&ideal, CatParity::Odd);
        assert!(fit.fidelity >= 0.99, "{fit:?}");
        // Squeezing along x puts the cat along p.
        assert!((fit.target.phase - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn realistic_subtraction_fits_cat() {
        let sv = squeezed_vacuum_state(R_3DB, 30).unwrap();
        let out = subtract_photon(&sv, &cfg(0.03, 0.05, 0.0)).unwrap();
        let fit = best_css_fit(&out.state, CatParity::Odd);
        assert!(fit.fidelity >= 0.95, "{fit:?}");
    }
}
