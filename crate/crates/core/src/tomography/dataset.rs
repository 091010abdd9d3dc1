use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homodyne::QuadratureSample;

pub const MIN_BIN_OCCUPANCY: usize = 100;

/// Discretisation used to cache POVM elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Binning {
    pub phase_bins: usize,
    /// Phase range covered by the bins, radians. With a span of π, samples
    /// at `θ ≥ π` are folded back through `p(x|θ+π) = p(−x|θ)`.
    pub phase_span: f64,
    pub x_bin: f64,
    /// Largest photon number in the reconstruction.
    pub cutoff: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Self { phase_bins: 36, phase_span: PI, x_bin: 0.05, cutoff: 10 }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if self.phase_bins == 0 || !(self.x_bin > 0.0) || self.cutoff == 0 {
            return Err(Error::Config(format!("invalid tomography binning {self:?}")));
        }
        if !(self.phase_span > 0.0 && self.phase_span <= 2.0 * PI + 1e-12) {
            return Err(Error::Config(format!("phase span {} outside (0, 2π]", self.phase_span)));
        }
        Ok(())
    }

    pub fn phase_width(&self) -> f64 {
        self.phase_span / self.phase_bins as f64
    }
}

/// One occupied `(θ, x)` bin, at its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub theta: f64,
    pub x: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct TomographyDataset {
    pub samples: Vec<QuadratureSample>,
    pub binning: Binning,
}

impl TomographyDataset {
    pub fn new(samples: Vec<QuadratureSample>, binning: Binning) -> Result<Self> {
        binning.validate()?;
        if samples.is_empty() {
            return Err(Error::Contract("empty tomography dataset".into()));
        }
        for s in &samples {
            if !s.value.is_finite() || !s.phase.is_finite() {
                return Err(Error::Contract(format!("segment {} has a non-finite value", s.segment_id)));
            }
        }
        let ds = Self { samples, binning };
        for s in &ds.samples {
            ds.reduce(s)?;
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cutoff(&self) -> usize {
        self.binning.cutoff
    }

    /// Map a sample into `[0, span)`, folding through the homodyne symmetry
    /// when the span is π.
    pub(crate) fn reduce(&self, s: &QuadratureSample) -> Result<(f64, f64)> {
        let span = self.binning.phase_span;
        let mut theta = s.phase.rem_euclid(2.0 * PI);
        let mut x = s.value;
        if theta >= span && span <= PI + 1e-12 && theta - PI >= 0.0 && theta - PI < span {
            theta -= PI;
            x = -x;
        }
        if theta >= span {
            return Err(Error::Contract(format!(
                "segment {} phase {} outside the binned span {}",
                s.segment_id, s.phase, span
            )));
        }
        Ok((theta, x))
    }

    /// Occupied bins in a fixed order, with a warning for sparse phase bins.
    pub fn cells(&self) -> Vec<Cell> {
        let width = self.binning.phase_width();
        let dx = self.binning.x_bin;
        let mut counts: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        let mut occupancy = vec![0usize; self.binning.phase_bins];
        for s in &self.samples {
            let (theta, x) = self.reduce(s).expect("validated on construction");
            let k = ((theta / width) as usize).min(self.binning.phase_bins - 1);
            let j = (x / dx).round() as i64;
            *counts.entry((k, j)).or_default() += 1;
            occupancy[k] += 1;
        }
        let sparse: Vec<usize> = (0..occupancy.len()).filter(|&k| occupancy[k] < MIN_BIN_OCCUPANCY).collect();
        if !sparse.is_empty() {
            log::warn!("{} phase bins hold fewer than {MIN_BIN_OCCUPANCY} samples (first: {})", sparse.len(), sparse[0]);
        }
        counts
            .into_iter()
            .map(|((k, j), count)| Cell { theta: (k as f64 + 0.5) * width, x: j as f64 * dx, count })
            .collect()
    }

    /// Samples per phase bin.
    pub fn phase_occupancy(&self) -> Vec<usize> {
        let width = self.binning.phase_width();
        let mut occ = vec![0usize; self.binning.phase_bins];
        for s in &self.samples {
            let (theta, _) = self.reduce(s).expect("validated on construction");
            occ[((theta / width) as usize).min(self.binning.phase_bins - 1)] += 1;
        }
        occ
    }
}
