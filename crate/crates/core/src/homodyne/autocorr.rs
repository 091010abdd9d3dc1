use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::{HomodyneRecord, TemporalMode};
use crate::error::{Error, Result};
use crate::fock::QuadratureConvention;
use crate::numeric::pairwise_reduce;

/// Minimum ensemble size for mode extraction.
pub const MIN_RECORDS: usize = 1000;
const GAP_TOL: f64 = 1e-6;
/// Leading eigenvalue must clear the vacuum noise edge by this factor.
const EDGE_MARGIN: f64 = 1.1;
const CHUNK: usize = 256;

/// Running sum of `x xᵀ` over records; partial accumulators merge exactly.
#[derive(Debug, Clone)]
pub struct AutocorrelationAccumulator {
    sum: DMatrix<f64>,
    count: usize,
    dt: f64,
}

impl AutocorrelationAccumulator {
    pub fn new(n_samples: usize, dt: f64) -> Self {
        Self { sum: DMatrix::zeros(n_samples, n_samples), count: 0, dt }
    }

    pub fn add(&mut self, record: &HomodyneRecord) -> Result<()> {
        self.check(record)?;
        let x = DVector::from_column_slice(&record.samples);
        self.sum.ger(1.0, &x, &x, 1.0);
        self.count += 1;
        Ok(())
    }

    fn check(&self, record: &HomodyneRecord) -> Result<()> {
        if record.samples.len() != self.sum.nrows() || (record.dt - self.dt).abs() > 1e-6 * self.dt {
            return Err(Error::Contract("records must share one sampling geometry".into()));
        }
        Ok(())
    }

    /// Add a block of records with one matrix product.
    pub fn add_block(&mut self, records: &[HomodyneRecord]) -> Result<()> {
        for r in records {
            self.check(r)?;
        }
        if records.is_empty() {
            return Ok(());
        }
        let n = self.sum.nrows();
        let x = DMatrix::from_fn(records.len(), n, |i, j| records[i].samples[j]);
        self.sum.gemm_tr(1.0, &x, &x, 1.0);
        self.count += records.len();
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.sum += other.sum;
        self.count += other.count;
        self
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `R̂_ij = mean(x_i x_j)`.
    pub fn autocorrelation(&self) -> DMatrix<f64> {
        &self.sum / self.count.max(1) as f64
    }

    /// Parallel accumulation in fixed-size chunks with a pairwise merge, so
    /// the floating-point result is independent of thread count.
    pub fn from_records(records: &[HomodyneRecord]) -> Result<Self> {
        let first = records.first().ok_or_else(|| Error::Contract("no records".into()))?;
        let (n, dt) = (first.samples.len(), first.dt);
        let partials: Vec<Self> = records
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = Self::new(n, dt);
                acc.add_block(chunk).map(|_| acc)
            })
            .collect::<Result<_>>()?;
        Ok(pairwise_reduce(partials, Self::merge).expect("non-empty"))
    }
}

/// Leading autocorrelation eigenmode and the full spectrum.
#[derive(Debug, Clone)]
pub struct ModeExtraction {
    pub mode: TemporalMode,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Leading eigenvalue is not resolved from the next one or from the
    /// vacuum noise bulk.
    pub ambiguous: bool,
    pub records: usize,
}

impl ModeExtraction {
    /// Largest eigenvalue expected from pure vacuum records (Marchenko-Pastur edge).
    pub fn vacuum_edge(&self) -> f64 {
        let ratio = self.eigenvalues.len() as f64 / self.records as f64;
        QuadratureConvention::VACUUM_VARIANCE * (1.0 + ratio.sqrt()).powi(2)
    }
}

/// Eigen-decompose the ensemble autocorrelation and return its leading mode,
/// sign-fixed to be positive at the window centre.
pub fn extract_mode_from_autocorrelation(records: &[HomodyneRecord]) -> Result<ModeExtraction> {
    if records.len() < MIN_RECORDS {
        return Err(Error::Contract(format!(
            "mode extraction needs at least {MIN_RECORDS} records, got {}",
            records.len()
        )));
    }
    let acc = AutocorrelationAccumulator::from_records(records)?;
    extract_from_accumulator(&acc)
}

pub(crate) fn extract_from_accumulator(acc: &AutocorrelationAccumulator) -> Result<ModeExtraction> {
    let eig = SymmetricEigen::new(acc.autocorrelation());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut lead: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let centre = lead.len() / 2;
    let anchor = if lead[centre].abs() > 1e-8 {
        lead[centre]
    } else {
        lead.iter().copied().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m })
    };
    if anchor < 0.0 {
        lead.iter_mut().for_each(|v| *v = -*v);
    }
    let mode = TemporalMode::from_values(acc.dt, lead)?;
    let mut out = ModeExtraction { mode, eigenvalues, ambiguous: false, records: acc.count };
    let gap = out.eigenvalues[0] - out.eigenvalues.get(1).copied().unwrap_or(f64::NEG_INFINITY);
    out.ambiguous = gap < GAP_TOL || out.eigenvalues[0] < EDGE_MARGIN * out.vacuum_edge();
    Ok(out)
}
