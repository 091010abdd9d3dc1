use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::TomographyDataset;
use super::povm::{povm_element, povm_vector};
use crate::channels::loss_adjoint;
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::numeric::pairwise_reduce;
use crate::rng::{stream, Stream};

/// Probabilities below this are dropped from the current iteration.
const MIN_PROBABILITY: f64 = 1e-14;
const CHUNK: usize = 512;
/// Smallest dilution step tried before an iteration is accepted regardless.
const MIN_DILUTION: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop when no element of ρ moves by more than this.
    pub max_change: f64,
    /// Stop when the log-likelihood gains less than this.
    pub min_gain: f64,
    /// One POVM per sample instead of per `(θ, x)` bin.
    pub unbinned: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, max_change: 1e-9, min_gain: 1e-10, unbinned: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Log-likelihood of the starting point followed by one entry per iteration.
    pub likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Detection efficiency folded into the POVM (1 = uncorrected).
    pub eta: f64,
    /// Iterations that needed a diluted step to keep the likelihood rising.
    pub diluted_iterations: usize,
}

impl MleResult {
    /// Largest drop between consecutive likelihood entries (0 if monotone).
    pub fn worst_likelihood_drop(&self) -> f64 {
        self.likelihood_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

enum Povm {
    /// `v v†` with the bin width dropped (it only shifts the log-likelihood).
    Rank1(DVector<Complex64>),
    Full(DMatrix<Complex64>),
}

struct Term {
    weight: f64,
    povm: Povm,
}

impl Term {
    fn probability(&self, rho: &DMatrix<Complex64>) -> f64 {
        match &self.povm {
            Povm::Rank1(v) => {
                let d = v.len();
                let mut acc = 0.0;
                for j in 0..d {
                    let mut col = Complex64::new(0.0, 0.0);
                    for i in 0..d {
                        col += v[i].conj() * rho[(i, j)];
                    }
                    acc += (col * v[j]).re;
                }
                acc
            }
            // Tr(Π ρ) = Σ Π_ij conj(ρ_ij) for Hermitian ρ
            Povm::Full(p) => p.iter().zip(rho.iter()).map(|(a, b)| (a * b.conj()).re).sum(),
        }
    }

    fn accumulate(&self, scale: f64, r: &mut DMatrix<Complex64>) {
        match &self.povm {
            Povm::Rank1(v) => r.ger(Complex64::from(scale), v, &v.conjugate(), Complex64::from(1.0)),
            Povm::Full(p) => r.zip_apply(p, |a, b| *a += b * scale),
        }
    }
}

struct Partial {
    r: DMatrix<Complex64>,
    log_likelihood: f64,
    dropped: usize,
}

fn build_terms(data: &TomographyDataset, eta: f64, unbinned: bool) -> Result<Vec<Term>> {
    let cutoff = data.cutoff();
    let dx = data.binning.x_bin;
    if unbinned {
        data.samples
            .par_iter()
            .map(|s| {
                let (theta, x) = data.reduce(s)?;
                let v = povm_vector(theta, x, cutoff);
                let povm = if eta < 1.0 { Povm::Full(loss_adjoint(&(&v * v.adjoint()), eta)) } else { Povm::Rank1(v) };
                Ok(Term { weight: 1.0, povm })
            })
            .collect()
    } else {
        data.cells()
            .par_iter()
            .map(|c| {
                let povm = if eta < 1.0 {
                    Povm::Full(povm_element(c.theta, c.x, eta, cutoff, dx)?)
                } else {
                    Povm::Rank1(povm_vector(c.theta, c.x, cutoff))
                };
                Ok(Term { weight: c.count as f64, povm })
            })
            .collect()
    }
}

/// `R(ρ) = (1/M) Σ_j w_j Π_j / Tr(Π_j ρ)` and `Σ_j w_j ln Tr(Π_j ρ)`, reduced
/// over fixed chunks so the result does not depend on the thread count.
fn evaluate(terms: &[Term], rho: &DMatrix<Complex64>, total_weight: f64) -> Partial {
    let d = rho.nrows();
    let partials: Vec<Partial> = terms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut part = Partial { r: DMatrix::zeros(d, d), log_likelihood: 0.0, dropped: 0 };
            for t in chunk {
                let p = t.probability(rho);
                if p < MIN_PROBABILITY {
                    part.dropped += 1;
                    continue;
                }
                part.log_likelihood += t.weight * p.ln();
                t.accumulate(t.weight / (p * total_weight), &mut part.r);
            }
            part
        })
        .collect();
    pairwise_reduce(partials, |mut a, b| {
        a.r += b.r;
        a.log_likelihood += b.log_likelihood;
        a.dropped += b.dropped;
        a
    })
    .expect("at least one term")
}

fn step(rho: &DMatrix<Complex64>, r: &DMatrix<Complex64>, dilution: Option<f64>) -> DMatrix<Complex64> {
    let r = match dilution {
        None => r.clone(),
        Some(eps) => {
            let d = r.nrows();
            (DMatrix::identity(d, d) + r * Complex64::from(eps)) / Complex64::from(1.0 + eps)
        }
    };
    let next = &r * rho * &r;
    let next = (&next + next.adjoint()) * Complex64::from(0.5);
    let tr = next.trace().re;
    next / Complex64::from(tr)
}

/// Iterative `ρ ← N[R ρ R]` maximum-likelihood reconstruction from the
/// maximally mixed state. When a full step would lower the likelihood the
/// step is diluted to `R_ε = (I + εR)/(1 + ε)` with ε halved until it rises.
pub fn mle_reconstruct(data: &TomographyDataset, eta: f64, opts: &MleOptions) -> Result<MleResult> {
    if !(eta > 0.5 && eta <= 1.0) {
        return Err(Error::EfficiencyRefused(eta));
    }
    let terms = build_terms(data, eta, opts.unbinned)?;
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    let d = data.cutoff() + 1;
    let mut rho: DMatrix<Complex64> = DMatrix::identity(d, d) / Complex64::from(d as f64);
    let mut current = evaluate(&terms, &rho, total);
    let mut trace = vec![current.log_likelihood];
    let mut converged = false;
    let mut iterations = 0;
    let mut diluted = 0;
    let mut warned = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut dilution = None;
        let (next_rho, next) = loop {
            let cand = step(&rho, &current.r, dilution);
            let eval = evaluate(&terms, &cand, total);
            let eps = dilution.unwrap_or(2.0);
            if eval.log_likelihood >= current.log_likelihood || eps <= MIN_DILUTION {
                break (cand, eval);
            }
            dilution = Some(eps / 2.0);
        };
        if dilution.is_some() {
            diluted += 1;
        }
        if next.dropped > 0 && !warned {
            log::warn!("{} samples with Tr(Πρ) < {MIN_PROBABILITY:e} were down-weighted", next.dropped);
            warned = true;
        }
        let change = (&next_rho - &rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let gain = next.log_likelihood - current.log_likelihood;
        rho = next_rho;
        current = next;
        trace.push(current.log_likelihood);
        if change < opts.max_change || gain < opts.min_gain {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("maximum-likelihood iteration stopped at the {} iteration cap", opts.max_iterations);
    }
    Ok(MleResult {
        rho: DensityMatrix::from_matrix_unchecked(rho),
        likelihood_trace: trace,
        iterations,
        converged,
        eta,
        diluted_iterations: diluted,
    })
}

/// Spread of reconstructed populations over nonparametric bootstrap replicas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicas: usize,
    pub population_mean: Vec<f64>,
    pub population_std: Vec<f64>,
}

/// Resample segments with replacement and reconstruct each replica.
pub fn bootstrap(data: &TomographyDataset, eta: f64, opts: &MleOptions, replicas: usize, seed: u64) -> Result<BootstrapSummary> {
    if replicas < 2 {
        return Err(Error::Config("bootstrap needs at least 2 replicas".into()));
    }
    let n = data.len();
    let pops: Vec<Vec<f64>> = (0..replicas)
        .map(|b| {
            let mut rng = stream(seed, Stream::Bootstrap, b as u64);
            let samples = (0..n).map(|_| data.samples[rng.random_range(0..n)]).collect();
            let replica = TomographyDataset::new(samples, data.binning.clone())?;
            Ok(mle_reconstruct(&replica, eta, opts)?.rho.populations())
        })
        .collect::<Result<_>>()?;
    let d = pops[0].len();
    let mean: Vec<f64> = (0..d).map(|k| pops.iter().map(|p| p[k]).sum::<f64>() / replicas as f64).collect();
    let std = (0..d)
        .map(|k| (pops.iter().map(|p| (p[k] - mean[k]).powi(2)).sum::<f64>() / (replicas - 1) as f64).sqrt())
        .collect();
    Ok(BootstrapSummary { replicas, population_mean: mean, population_std: std })
}
