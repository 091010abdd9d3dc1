use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mle::MleResult;
use crate::error::{Error, Result};
use crate::fock::{fidelity_with_state, photon_statistics, wigner, wigner_point, DensityMatrix, Padding, WignerGrid};
use crate::herald::{best_css_fit, CatParity, CssFit};
use crate::numeric::linspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    /// Points per axis of the Wigner grid.
    pub grid_points: usize,
    /// The grid spans `[−extent, extent]` in both quadratures.
    pub grid_extent: f64,
    /// Report on a reconstruction that hit the iteration cap.
    pub allow_unconverged: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { grid_points: 81, grid_extent: 3.0, allow_unconverged: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fidelities {
    pub single_photon: f64,
    /// Best coherent-state superposition of the dominant parity.
    pub css: CssFit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomographyReport {
    pub eta: f64,
    pub populations: Vec<f64>,
    pub mean_photon_number: f64,
    pub parity: f64,
    pub w00: f64,
    pub wigner_min: f64,
    pub fidelities: Fidelities,
    pub likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rho: DensityMatrix,
    pub wigner: WignerGrid,
}

pub fn tomography_report(result: &MleResult, opts: &ReportOptions) -> Result<TomographyReport> {
    if !result.converged && !opts.allow_unconverged {
        return Err(Error::Contract(format!(
            "reconstruction did not converge in {} iterations",
            result.iterations
        )));
    }
    let rho = &result.rho;
    let stats = photon_statistics(rho);
    let mut one = vec![Complex64::new(0.0, 0.0); 2];
    one[1] = Complex64::new(1.0, 0.0);
    let single_photon = fidelity_with_state(rho, &one, Padding::Auto)?;
    let parity = if stats.odd_weight() >= stats.even_weight() { CatParity::Odd } else { CatParity::Even };
    let css = best_css_fit(rho, parity);
    let axis = linspace(-opts.grid_extent, opts.grid_extent, opts.grid_points);
    let grid = wigner(rho, &axis, &axis);
    Ok(TomographyReport {
        eta: result.eta,
        populations: stats.populations.clone(),
        mean_photon_number: stats.mean_photon_number,
        parity: stats.parity,
        w00: wigner_point(rho, 0.0, 0.0),
        wigner_min: grid.min(),
        fidelities: Fidelities { single_photon, css },
        likelihood_trace: result.likelihood_trace.clone(),
        iterations: result.iterations,
        converged: result.converged,
        rho: rho.clone(),
        wigner: grid,
    })
}
