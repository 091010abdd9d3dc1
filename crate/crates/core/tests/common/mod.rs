//! Property checks shared by the proptest suite and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use heraldkit::channels::{loss_adjoint, loss_apply, loss_invert};
use heraldkit::fock::{photon_statistics, quadrature_pdf, wigner_point, DensityMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

/// Ginibre-random density matrix of dimension `dim` from `2·dim²` reals.
pub fn ginibre(dim: usize, raw: &[f64]) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1]));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_matrix(m / Complex64::from(tr)).expect("Ginibre state is a density matrix")
}

pub fn random_state() -> impl Strategy<Value = DensityMatrix> {
    (2usize..9).prop_flat_map(|d| prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |raw| ginibre(d, &raw)))
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn loss_semigroup(rho: &DensityMatrix, a: f64, b: f64) -> Result<(), String> {
    let two = loss_apply(&loss_apply(rho, a).unwrap(), b).unwrap();
    let one = loss_apply(rho, a * b).unwrap();
    let d = max_diff(two.matrix(), one.matrix());
    if d < 1e-12 { Ok(()) } else { Err(format!("semigroup violated by {d}")) }
}

pub fn loss_preserves_states(rho: &DensityMatrix, eta: f64) -> Result<(), String> {
    let out = loss_apply(rho, eta).unwrap();
    let min = out.eigenvalues()[0];
    if (out.trace() - 1.0).abs() > 1e-12 || min < -1e-12 || out.hermiticity_error() > 1e-12 {
        return Err(format!("trace {}, min eigenvalue {min}", out.trace()));
    }
    Ok(())
}

pub fn inversion_round_trip(rho: &DensityMatrix, eta: f64) -> Result<(), String> {
    let lossy = loss_apply(rho, eta).unwrap();
    let back = loss_invert(&lossy, eta, rho.cutoff()).unwrap();
    let d = max_diff(back.state.matrix(), rho.matrix());
    if d < 1e-8 && back.clipped_mass < 1e-8 { Ok(()) } else { Err(format!("round trip error {d}")) }
}

pub fn loss_duality(rho: &DensityMatrix, obs: &DensityMatrix, eta: f64) -> Result<(), String> {
    let lhs = (loss_apply(rho, eta).unwrap().matrix() * obs.matrix()).trace();
    let rhs = (rho.matrix() * loss_adjoint(obs.matrix(), eta)).trace();
    if (lhs - rhs).norm() < 1e-12 { Ok(()) } else { Err(format!("{lhs} vs {rhs}")) }
}

pub fn wigner_parity(rho: &DensityMatrix) -> Result<(), String> {
    let w = wigner_point(rho, 0.0, 0.0);
    let expect = photon_statistics(rho).parity / PI;
    if (w - expect).abs() < 1e-12 { Ok(()) } else { Err(format!("W(0,0) = {w}, parity/π = {expect}")) }
}

pub fn homodyne_symmetry(rho: &DensityMatrix, theta: f64, x: f64) -> Result<(), String> {
    let a = quadrature_pdf(rho, theta + PI, x).unwrap();
    let b = quadrature_pdf(rho, theta, -x).unwrap();
    if (a - b).abs() < 1e-12 && a > -1e-12 { Ok(()) } else { Err(format!("{a} vs {b}")) }
}

pub fn wigner_bounded(rho: &DensityMatrix, x: f64, p: f64) -> Result<(), String> {
    let w = wigner_point(rho, x, p);
    if w.abs() <= 1.0 / PI + 1e-12 { Ok(()) } else { Err(format!("|W| = {} exceeds 1/π", w.abs())) }
}
