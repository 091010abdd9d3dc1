use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fock::QuadratureConvention;

/// Oscilloscope sample interval: 5 GS/s.
pub const RECORD_DT: f64 = 0.2e-9;
/// Samples per 100 ns segment.
pub const RECORD_SAMPLES: usize = 500;

const NORM_TOL: f64 = 1e-9;

/// Unit-norm discrete temporal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMode {
    pub dt: f64,
    values: Vec<f64>,
}

impl TemporalMode {
    /// Normalise `values` to unit ℓ2 norm.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Contract("temporal mode has zero norm".into()));
        }
        Ok(Self { dt, values: values.into_iter().map(|v| v / norm).collect() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &TemporalMode) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// `c·self + √(1−c²)·h⊥`, where `h⊥` is `other` orthogonalised against
    /// `self`. The result has overlap exactly `c` with `self`.
    pub fn blend(&self, other: &TemporalMode, c: f64) -> Result<TemporalMode> {
        let proj = self.overlap(other);
        let perp: Vec<f64> = other.values.iter().zip(&self.values).map(|(o, s)| o - proj * s).collect();
        let perp = TemporalMode::from_values(self.dt, perp)?;
        let s = (1.0 - c * c).max(0.0).sqrt();
        let values = self.values.iter().zip(&perp.values).map(|(a, b)| c * a + s * b).collect();
        TemporalMode::from_values(self.dt, values)
    }

    fn check_unit(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!("temporal mode norm is {n}, expected 1")));
        }
        Ok(())
    }
}

/// Double-sided exponential `f_i ∝ e^{−γ|t_i − t_c|}`, centred in the window.
/// `gamma` is the cavity half-width in rad/s.
pub fn double_sided_exponential_mode(gamma: f64, dt: f64, n: usize) -> Result<TemporalMode> {
    if !(gamma > 0.0) || !(dt > 0.0) || n == 0 {
        return Err(Error::Domain(format!("invalid mode geometry γ = {gamma}, dt = {dt}, n = {n}")));
    }
    if (n as f64) * dt < 6.0 / gamma {
        log::warn!("record window {:.3e} s shorter than 6/γ = {:.3e} s", n as f64 * dt, 6.0 / gamma);
    }
    let tc = 0.5 * (n - 1) as f64 * dt;
    let values = (0..n).map(|i| (-gamma * (i as f64 * dt - tc).abs()).exp()).collect();
    TemporalMode::from_values(dt, values)
}

/// A sampled homodyne photocurrent segment.
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneRecord {
    /// Trigger time within the sweep, seconds.
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
    pub lo_phase: f64,
}

/// Embed quadrature `q0` in mode `f` over vacuum:
/// `x = q0·f + (I − f fᵀ)·w`, `w` white with variance 1/2 per sample.
pub fn synthesize_record<R: Rng + ?Sized>(
    q0: f64,
    mode: &TemporalMode,
    t0: f64,
    lo_phase: f64,
    rng: &mut R,
) -> Result<HomodyneRecord> {
    mode.check_unit()?;
    let normal = Normal::new(0.0, QuadratureConvention::VACUUM_VARIANCE.sqrt()).expect("valid normal");
    let noise: Vec<f64> = (0..mode.len()).map(|_| normal.sample(rng)).collect();
    let along: f64 = noise.iter().zip(mode.values()).map(|(w, f)| w * f).sum();
    let samples = noise.iter().zip(mode.values()).map(|(w, f)| q0 * f + w - along * f).collect();
    Ok(HomodyneRecord { t0, dt: mode.dt, samples, lo_phase })
}

/// Quadrature of `record` in mode `g`: `Σ g_i x_i`.
pub fn mode_filter(record: &HomodyneRecord, mode: &TemporalMode) -> Result<f64> {
    mode.check_unit()?;
    if record.samples.len() != mode.len() {
        return Err(Error::Contract(format!(
            "record has {} samples, mode has {}",
            record.samples.len(),
            mode.len()
        )));
    }
    if (record.dt - mode.dt).abs() > 1e-6 * mode.dt {
        return Err(Error::Contract(format!("record dt {} differs from mode dt {}", record.dt, mode.dt)));
    }
    Ok(record.samples.iter().zip(mode.values()).map(|(x, g)| x * g).sum())
}
