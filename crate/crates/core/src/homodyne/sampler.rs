use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::fock::{wavefunction_ladder, DensityMatrix, QuadratureConvention};
use crate::rng::{stream, Stream};

/// Grid step of the inverse-CDF tables.
pub const SAMPLER_DX: f64 = 5e-3;
/// Phase resolution of the table cache, radians.
pub const THETA_BIN: f64 = 1e-3;

const CACHE_LIMIT: usize = 512;

/// Inverse-CDF sampler for `p(x|θ)` of a fixed state.
///
/// The density is expanded once as `p(x|θ) = Σ_k Re(c_k e^{ikθ} D_k(x))`
/// with `D_k(x) = Σ_m ρ_{m,m+k} ψ_m(x) ψ_{m+k}(x)`, so building the table for
/// a new phase bin costs one pass over the grid.
pub struct QuadratureSampler {
    xs: Vec<f64>,
    /// `bands[k][i] = D_k(xs[i])`.
    bands: Vec<Vec<Complex64>>,
    cache: Mutex<HashMap<i64, Arc<Vec<f64>>>>,
}

fn theta_key(theta: f64) -> i64 {
    (theta.rem_euclid(2.0 * PI) / THETA_BIN).round() as i64
}

impl QuadratureSampler {
    pub fn new(rho: &DensityMatrix) -> Self {
        let (lo, hi) = QuadratureConvention::X_RANGE;
        let xs = crate::numeric::step_grid(lo, hi, SAMPLER_DX);
        let d = rho.dim();
        let ladders: Vec<Vec<f64>> = xs.iter().map(|&x| wavefunction_ladder(x, d - 1)).collect();
        let bands = (0..d)
            .map(|k| {
                ladders
                    .iter()
                    .map(|psi| {
                        (0..(d - k)).map(|m| rho.get(m, m + k) * (psi[m] * psi[m + k])).sum::<Complex64>()
                    })
                    .collect()
            })
            .collect();
        Self { xs, bands, cache: Mutex::new(HashMap::new()) }
    }

    /// Density on the sampler grid at phase `theta`.
    pub fn density(&self, theta: f64) -> Vec<f64> {
        let phases: Vec<Complex64> = (0..self.bands.len()).map(|k| Complex64::from_polar(1.0, k as f64 * theta)).collect();
        (0..self.xs.len())
            .map(|i| {
                let mut p = self.bands[0][i].re;
                for k in 1..self.bands.len() {
                    p += 2.0 * (self.bands[k][i] * phases[k]).re;
                }
                p.max(0.0)
            })
            .collect()
    }

    fn build_cdf(&self, theta: f64) -> Vec<f64> {
        let p = self.density(theta);
        let mut cdf = Vec::with_capacity(p.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in p.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * SAMPLER_DX;
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        cdf
    }

    fn table(&self, theta: f64) -> Arc<Vec<f64>> {
        let key = theta_key(theta);
        let mut cache = self.cache.lock().expect("sampler cache poisoned");
        if let Some(t) = cache.get(&key) {
            return Arc::clone(t);
        }
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        let table = Arc::new(self.build_cdf(key as f64 * THETA_BIN));
        cache.insert(key, Arc::clone(&table));
        table
    }

    fn invert(&self, cdf: &[f64], u: f64) -> f64 {
        let i = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1) - 1;
        let span = cdf[i + 1] - cdf[i];
        let frac = if span > 0.0 { (u - cdf[i]) / span } else { 0.5 };
        self.xs[i] + frac * SAMPLER_DX
    }

    /// Draw one quadrature value at phase `theta`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        let cdf = self.table(theta);
        self.invert(&cdf, rng.random::<f64>())
    }

    /// Sample every `(segment_id, θ)` with its own stream derived from `seed`.
    /// Output order matches the input and does not depend on scheduling.
    pub fn sample_segments(&self, segments: &[(u64, f64)], seed: u64) -> Vec<f64> {
        let mut by_bin: HashMap<i64, Vec<usize>> = HashMap::new();
        for (idx, &(_, theta)) in segments.iter().enumerate() {
            by_bin.entry(theta_key(theta)).or_default().push(idx);
        }
        let mut bins: Vec<(i64, Vec<usize>)> = by_bin.into_iter().collect();
        bins.sort_by_key(|(k, _)| *k);
        let drawn: Vec<Vec<(usize, f64)>> = bins
            .par_iter()
            .map(|(key, members)| {
                let cdf = self.build_cdf(*key as f64 * THETA_BIN);
                members
                    .iter()
                    .map(|&idx| {
                        let mut rng = stream(seed, Stream::Quadrature, segments[idx].0);
                        (idx, self.invert(&cdf, rng.random::<f64>()))
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; segments.len()];
        for (idx, x) in drawn.into_iter().flatten() {
            out[idx] = x;
        }
        out
    }
}

/// One draw from `p(·|θ)`. Builds a throwaway sampler; prefer
/// [`QuadratureSampler`] for repeated draws.
pub fn sample_quadrature<R: Rng + ?Sized>(rho: &DensityMatrix, theta: f64, rng: &mut R) -> f64 {
    QuadratureSampler::new(rho).sample(theta, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::quadrature_pdf;
    use crate::numeric::{ks_one_sample, ks_two_sample, step_grid};
    use crate::opo::squeezed_vacuum_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R_3DB: f64 = 0.346_573_590_279_972_6;

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
    }

    fn draws(rho: &DensityMatrix, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        let sampler = QuadratureSampler::new(rho);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sampler.sample(theta, &mut rng)).collect()
    }

    /// CDF by fine trapezoid on the exact density (independent of the sampler tables).
    fn exact_cdf(rho: &DensityMatrix, theta: f64) -> impl Fn(f64) -> f64 {
        let dx = 1e-3;
        let xs = step_grid(-12.0, 12.0, dx);
        let p: Vec<f64> = xs.iter().map(|&x| quadrature_pdf(rho, theta, x).unwrap()).collect();
        let mut cdf = vec![0.0];
        for w in p.windows(2) {
            let last = *cdf.last().unwrap();
            cdf.push(last + 0.5 * (w[0] + w[1]) * dx);
        }
        move |x: f64| {
            let pos = ((x + 12.0) / dx).clamp(0.0, (cdf.len() - 1) as f64);
            let i = (pos.floor() as usize).min(cdf.len() - 2);
            cdf[i] + (pos - i as f64) * (cdf[i + 1] - cdf[i])
        }
    }

    #[test]
    fn moments_of_reference_states() {
        let vac = draws(&DensityMatrix::vacuum(4), 0.3, 1_000_000, 1);
        assert!((variance(&vac) - 0.5).abs() < 0.002);
        let one = draws(&DensityMatrix::fock(1, 4), 1.1, 1_000_000, 2);
        assert!((variance(&one) - 1.5).abs() < 0.005);
        let sv = squeezed_vacuum_state(R_3DB, 30).unwrap();
        let sq = draws(&sv, 0.0, 1_000_000, 3);
        assert!((variance(&sq) - 0.25).abs() < 0.002);
    }

    #[test]
    fn ks_against_exact_density() {
        let sv = squeezed_vacuum_state(R_3DB, 30).unwrap();
        let kitten = {
            let ket = crate::opo::squeezed_vacuum_ket(R_3DB, 31).unwrap();
            let sub: Vec<Complex64> = (0..31).map(|n| ket[n + 1] * ((n + 1) as f64).sqrt()).collect();
            DensityMatrix::from_pure(&sub)
        };
        let states = [DensityMatrix::vacuum(4), DensityMatrix::fock(1, 4), sv, kitten];
        for (i, rho) in states.iter().enumerate() {
            for theta in [0.0, 0.8, PI / 2.0] {
                let x = draws(rho, theta, 100_000, 10 + i as u64);
                let ks = ks_one_sample(&x, exact_cdf(rho, theta));
                assert!(ks < 0.006, "state {i}, θ = {theta}: KS = {ks}");
            }
        }
    }

    #[test]
    fn measured_like_mixture_matches_density() {
        let rho = DensityMatrix::from_diagonal(&[0.19, 0.78, 0.03]);
        let x = draws(&rho, 0.0, 1_000_000, 5);
        let ks = ks_one_sample(&x, exact_cdf(&rho, 0.0));
        assert!(ks < 0.002, "KS = {ks}");
    }

    #[test]
    fn homodyne_symmetry() {
        let ket = crate::opo::squeezed_vacuum_ket(R_3DB, 31).unwrap();
        let sub: Vec<Complex64> = (0..31).map(|n| ket[n + 1] * ((n + 1) as f64).sqrt()).collect();
        let mut rho = DensityMatrix::from_pure(&sub);
        rho = rho.rotated(0.4);
        let theta = 0.7;
        let shifted = draws(&rho, theta + PI, 100_000, 21);
        let mirrored: Vec<f64> = draws(&rho, theta, 100_000, 22).into_iter().map(|x| -x).collect();
        assert!(ks_two_sample(&shifted, &mirrored) < 0.01);
    }

    #[test]
    fn segment_sampling_is_order_independent() {
        let sampler = QuadratureSampler::new(&DensityMatrix::fock(1, 3));
        let segs: Vec<(u64, f64)> = (0..200).map(|i| (i, (i as f64 * 0.37) % PI)).collect();
        let a = sampler.sample_segments(&segs, 9);
        let mut rev = segs.clone();
        rev.reverse();
        let mut b = sampler.sample_segments(&rev, 9);
        b.reverse();
        assert_eq!(a, b);
    }
}
