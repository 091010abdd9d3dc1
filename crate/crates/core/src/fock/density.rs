use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-6;

/// Density operator on the truncated Fock space `|0⟩ … |dim−1⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DensityMatrixJson", try_from = "DensityMatrixJson")]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

/// Result of [`DensityMatrix::normalize`].
#[derive(Debug, Clone)]
pub struct Normalized {
    pub state: DensityMatrix,
    /// Total weight of negative eigenvalues removed before renormalising.
    pub clipped_mass: f64,
}

/// Lowering operator `a` truncated to `dim` levels.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

impl DensityMatrix {
    /// Wrap a matrix without any checks. Use [`DensityMatrix::normalize`] to
    /// enforce the density-matrix invariants.
    pub fn from_matrix_unchecked(elements: DMatrix<Complex64>) -> Self {
        assert!(elements.is_square(), "density matrix must be square");
        Self { elements }
    }

    /// Build from a matrix, requiring Hermiticity and unit trace.
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        if !elements.is_square() || elements.nrows() == 0 {
            return Err(Error::Contract(format!(
                "density matrix must be square and non-empty, got {}x{}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        let rho = Self { elements };
        let herm = rho.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::Contract(format!("matrix is not Hermitian (max |ρ−ρ†| = {herm:.3e})")));
        }
        rho.check_normalized()?;
        Ok(rho)
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim)
    }

    /// Number state `|n⟩⟨n|`.
    pub fn fock(n: usize, dim: usize) -> Self {
        assert!(n < dim, "photon number {n} outside cutoff dim {dim}");
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Self { elements: m }
    }

    /// Diagonal state from populations (normalised to unit trace).
    pub fn from_diagonal(populations: &[f64]) -> Self {
        let total: f64 = populations.iter().sum();
        let dim = populations.len();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(populations[i] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { elements: m }
    }

    /// Projector on a (normalised) ket.
    pub fn from_pure(ket: &[Complex64]) -> Self {
        let v = DVector::from_column_slice(ket);
        let norm = v.norm();
        let v = v / Complex64::new(norm, 0.0);
        Self { elements: &v * v.adjoint() }
    }

    /// Thermal state with mean photon number `mean`, truncated and renormalised.
    pub fn thermal(mean: f64, dim: usize) -> Self {
        let ratio = mean / (1.0 + mean);
        let pops: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32)).collect();
        Self::from_diagonal(&pops)
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// Highest photon number represented.
    pub fn cutoff(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.elements.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn purity(&self) -> f64 {
        (&self.elements * &self.elements).trace().re
    }

    /// `Tr(ρ A)`.
    pub fn expect(&self, op: &DMatrix<Complex64>) -> Complex64 {
        (&self.elements * op).trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.elements[(i, j)] - self.elements[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn check_normalized(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Contract(format!("state is not normalised (trace = {tr})")));
        }
        Ok(())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.hermitian_part().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Hermitise, clip negative eigenvalues and rescale to unit trace.
    pub fn normalize(&self) -> Result<Normalized> {
        let eig = self.hermitian_part().symmetric_eigen();
        let clipped_mass: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
        let kept: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = kept.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Contract("matrix has no positive spectral weight".into()));
        }
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (k, &l) in kept.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            m += (&v * v.adjoint()) * Complex64::new(l / total, 0.0);
        }
        if clipped_mass > 1e-9 {
            log::debug!("normalize clipped {clipped_mass:.3e} of negative spectral weight");
        }
        Ok(Normalized { state: Self { elements: m }, clipped_mass })
    }

    /// Rescale to unit trace and symmetrise without touching the spectrum.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(Error::Contract(format!("cannot renormalise state with trace {tr}")));
        }
        Ok(Self { elements: self.hermitian_part() / Complex64::new(tr, 0.0) })
    }

    /// Embed into a larger cutoff (zero padding) or truncate to a smaller one.
    pub fn resized(&self, dim: usize) -> Self {
        let d = self.dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            if i < d && j < d {
                self.elements[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { elements: m }
    }

    /// Convex mixture `(1 − w)·self + w·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Contract(format!("dimension mismatch {} vs {}", self.dim(), other.dim())));
        }
        Ok(Self {
            elements: &self.elements * Complex64::new(1.0 - w, 0.0) + &other.elements * Complex64::new(w, 0.0),
        })
    }

    /// Rotate by `e^{−iθ n̂}`: multiplies `ρ_mn` by `e^{−i(m−n)θ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| {
            self.elements[(i, j)] * Complex64::from_polar(1.0, -(i as f64 - j as f64) * theta)
        });
        Self { elements: m }
    }

    /// First two moments `(⟨x_θ⟩, ⟨x_θ²⟩)` of the rotated quadrature
    /// `x_θ = (a e^{−iθ} + a† e^{iθ})/√2`.
    pub fn quadrature_moments(&self, theta: f64) -> (f64, f64) {
        let d = self.dim();
        let mut a_mean = Complex64::new(0.0, 0.0);
        let mut a2_mean = Complex64::new(0.0, 0.0);
        let mut n_mean = 0.0;
        for n in 0..d {
            n_mean += n as f64 * self.elements[(n, n)].re;
            if n >= 1 {
                // Tr(ρ a) = Σ_n √n ρ_{n,n−1}
                a_mean += self.elements[(n, n - 1)] * (n as f64).sqrt();
            }
            if n >= 2 {
                a2_mean += self.elements[(n, n - 2)] * ((n * (n - 1)) as f64).sqrt();
            }
        }
        let phase = Complex64::from_polar(1.0, -theta);
        let x_mean = std::f64::consts::SQRT_2 * (a_mean * phase).re;
        let x2_mean = (a2_mean * phase * phase).re + n_mean + 0.5;
        (x_mean, x2_mean)
    }

    /// Variance of the rotated quadrature.
    pub fn quadrature_variance(&self, theta: f64) -> f64 {
        let (m1, m2) = self.quadrature_moments(theta);
        m2 - m1 * m1
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DensityMatrixJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DensityMatrixJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// On-disk form: `{"dim": int, "re": [[...]], "im": [[...]]}`.
#[derive(Debug, Serialize, Deserialize)]
struct DensityMatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let row = |f: fn(&Complex64) -> f64, i: usize| (0..d).map(|j| f(&rho.get(i, j))).collect();
        Self {
            dim: d,
            re: (0..d).map(|i| row(|z| z.re, i)).collect(),
            im: (0..d).map(|i| row(|z| z.im, i)).collect(),
        }
    }
}

impl From<DensityMatrix> for DensityMatrixJson {
    fn from(rho: DensityMatrix) -> Self {
        Self::from(&rho)
    }
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(raw: DensityMatrixJson) -> Result<Self> {
        let d = raw.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if d == 0 || !shape_ok(&raw.re) || !shape_ok(&raw.im) {
            return Err(Error::Format(format!("density matrix JSON does not match dim {d}")));
        }
        let m = DMatrix::from_fn(d, d, |i, j| Complex64::new(raw.re[i][j], raw.im[i][j]));
        DensityMatrix::from_matrix(m)
    }
}
