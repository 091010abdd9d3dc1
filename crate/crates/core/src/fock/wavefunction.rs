use std::f64::consts::PI;

use super::DensityMatrix;
use crate::error::{Error, Result};

/// Default largest photon number accepted by [`hermite_wavefunction`].
pub const DEFAULT_MAX_PHOTON: usize = 30;

const X_LIMIT: f64 = 40.0;

/// `ψ_0(x) … ψ_{n_max}(x)` by upward recurrence on the normalised
/// wavefunctions themselves:
/// `ψ_{n+1} = √(2/(n+1))·x·ψ_n − √(n/(n+1))·ψ_{n−1}`.
///
/// Working on ψ rather than on `H_n` keeps every intermediate bounded.
pub fn wavefunction_ladder(x: f64, n_max: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n_max + 1);
    psi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max >= 1 {
        psi.push(std::f64::consts::SQRT_2 * x * psi[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// Harmonic-oscillator eigenfunction `ψ_n(x)`, `n ≤ DEFAULT_MAX_PHOTON`.
pub fn hermite_wavefunction(n: usize, x: f64) -> Result<f64> {
    hermite_wavefunction_capped(n, x, DEFAULT_MAX_PHOTON)
}

/// As [`hermite_wavefunction`] with an explicit photon-number cap.
pub fn hermite_wavefunction_capped(n: usize, x: f64, n_max: usize) -> Result<f64> {
    if n > n_max {
        return Err(Error::Domain(format!("photon number {n} above cutoff {n_max}")));
    }
    if !x.is_finite() || x.abs() >= X_LIMIT {
        return Err(Error::Domain(format!("quadrature value {x} outside |x| < {X_LIMIT}")));
    }
    Ok(wavefunction_ladder(x, n)[n])
}

/// Marginal density `p(x|θ) = Σ ρ_mn e^{i(n−m)θ} ψ_m(x) ψ_n(x)` of the
/// quadrature `x_θ`.
pub fn quadrature_pdf(rho: &DensityMatrix, theta: f64, x: f64) -> Result<f64> {
    rho.check_normalized()?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("quadrature value {x} is not finite")));
    }
    let psi = wavefunction_ladder(x, rho.cutoff());
    Ok(pdf_from_ladder(rho, theta, &psi))
}

pub(crate) fn pdf_from_ladder(rho: &DensityMatrix, theta: f64, psi: &[f64]) -> f64 {
    let d = rho.dim();
    let mut acc = 0.0;
    for m in 0..d {
        acc += rho.get(m, m).re * psi[m] * psi[m];
        for n in (m + 1)..d {
            // ρ_nm = ρ_mn*, so the (m,n) and (n,m) terms combine into twice the real part.
            let phase = num_complex::Complex64::from_polar(1.0, (n as f64 - m as f64) * theta);
            acc += 2.0 * (rho.get(m, n) * phase).re * psi[m] * psi[n];
        }
    }
    acc
}
