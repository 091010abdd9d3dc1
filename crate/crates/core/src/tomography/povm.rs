use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channels::loss_adjoint;
use crate::error::{Error, Result};
use crate::fock::wavefunction_ladder;

/// `v_n = e^{inθ} ψ_n(x)`, so that `p(x|θ) = v† ρ v`.
pub fn povm_vector(theta: f64, x: f64, cutoff: usize) -> DVector<Complex64> {
    let psi = wavefunction_ladder(x, cutoff);
    DVector::from_fn(cutoff + 1, |n, _| Complex64::from_polar(psi[n], n as f64 * theta))
}

/// Quadrature-bin POVM element `Π(θ, x) = Δx · v v†` seen through a detector
/// of efficiency `eta`, i.e. the loss channel's adjoint applied to `Π`.
pub fn povm_element(theta: f64, x: f64, eta: f64, cutoff: usize, dx: f64) -> Result<DMatrix<Complex64>> {
    if !(eta > 0.5 && eta <= 1.0) {
        return Err(Error::EfficiencyRefused(eta));
    }
    if !x.is_finite() || !(dx > 0.0) {
        return Err(Error::Domain(format!("invalid quadrature bin x = {x}, dx = {dx}")));
    }
    let v = povm_vector(theta, x, cutoff);
    let pi = (&v * v.adjoint()) * Complex64::from(dx);
    Ok(if eta < 1.0 { loss_adjoint(&pi, eta) } else { pi })
}
