use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::error::{Error, Result};

/// How to treat states with different cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    #[default]
    Auto,
    Strict,
}

/// Fidelity `⟨t|ρ|t⟩` with a pure target ket.
pub fn fidelity_with_state(rho: &DensityMatrix, target: &[Complex64], padding: Padding) -> Result<f64> {
    if target.len() != rho.dim() && padding == Padding::Strict {
        return Err(Error::Contract(format!(
            "cutoff mismatch: state dim {} vs target dim {}",
            rho.dim(),
            target.len()
        )));
    }
    let norm2: f64 = target.iter().map(|c| c.norm_sqr()).sum();
    let d = rho.dim().min(target.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..d {
        for n in 0..d {
            acc += target[m].conj() * rho.get(m, n) * target[n];
        }
    }
    Ok((acc.re / norm2).clamp(0.0, 1.0))
}

/// Fidelity with a pure target given as a density matrix, `Tr(ρσ)`.
///
/// Mixed-mixed (Uhlmann) fidelity is not provided; a mixed `target` is a
/// contract error.
pub fn fidelity(rho: &DensityMatrix, target: &DensityMatrix, padding: Padding) -> Result<f64> {
    if rho.dim() != target.dim() && padding == Padding::Strict {
        return Err(Error::Contract(format!("cutoff mismatch: {} vs {}", rho.dim(), target.dim())));
    }
    let purity = target.purity();
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("target is mixed (purity {purity:.6}); only pure targets are supported")));
    }
    let d = rho.dim().max(target.dim());
    let (a, b) = (rho.resized(d), target.resized(d));
    Ok((a.matrix() * b.matrix()).trace().re.clamp(0.0, 1.0))
}

/// Photon-number distribution with its first moment and parity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub populations: Vec<f64>,
    pub mean_photon_number: f64,
    /// `Σ (−1)^n p_n`.
    pub parity: f64,
}

impl PhotonStatistics {
    pub fn even_weight(&self) -> f64 {
        self.populations.iter().step_by(2).sum()
    }

    pub fn odd_weight(&self) -> f64 {
        self.populations.iter().skip(1).step_by(2).sum()
    }
}

pub fn photon_statistics(rho: &DensityMatrix) -> PhotonStatistics {
    let populations = rho.populations();
    let mean_photon_number = populations.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let parity = populations.iter().enumerate().map(|(n, p)| if n % 2 == 0 { *p } else { -p }).sum();
    PhotonStatistics { populations, mean_photon_number, parity }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn fidelity_examples() {
        let pure = DensityMatrix::from_pure(&ket(&[0.6, 0.8, 0.0]));
        assert!((fidelity(&pure, &pure, Padding::Strict).unwrap() - 1.0).abs() < 1e-12);
        let measured = DensityMatrix::from_diagonal(&[0.22, 0.78]);
        assert!((fidelity_with_state(&measured, &ket(&[0.0, 1.0]), Padding::Strict).unwrap() - 0.78).abs() < 1e-12);
        let vac = DensityMatrix::vacuum(2);
        assert_eq!(fidelity_with_state(&vac, &ket(&[0.0, 1.0]), Padding::Strict).unwrap(), 0.0);
    }

    #[test]
    fn padding_rules() {
        let measured = DensityMatrix::from_diagonal(&[0.22, 0.78]);
        let one = ket(&[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(fidelity_with_state(&measured, &one, Padding::Strict), Err(Error::Contract(_))));
        assert!((fidelity_with_state(&measured, &one, Padding::Auto).unwrap() - 0.78).abs() < 1e-12);
        let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]);
        assert!(fidelity(&measured, &mixed, Padding::Auto).is_err());
    }

    #[test]
    fn statistics_of_vacuum_and_mixture() {
        let s = photon_statistics(&DensityMatrix::vacuum(4));
        assert_eq!(s.populations, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.parity, 1.0);
        let s = photon_statistics(&DensityMatrix::from_diagonal(&[0.19, 0.78, 0.03]));
        assert!((s.mean_photon_number - 0.84).abs() < 1e-12);
        assert!((s.parity + 0.56).abs() < 1e-12);
        assert!((s.odd_weight() - 0.78).abs() < 1e-12);
    }
}
