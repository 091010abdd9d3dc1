use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::error::Result;

/// Wigner function sampled on a rectangular `(x, p)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row-major in `x`: `values[ix * ps.len() + ip]`.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.ps.len() + ip]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Riemann sum over the lattice, assuming uniform spacing.
    pub fn integral(&self) -> f64 {
        let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
        crate::numeric::pairwise_sum(&self.values) * step(&self.xs) * step(&self.ps)
    }

    /// CSV with header `x,p,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,p,w")?;
        for (ix, x) in self.xs.iter().enumerate() {
            for (ip, p) in self.ps.iter().enumerate() {
                writeln!(out, "{x},{p},{}", self.at(ix, ip))?;
            }
        }
        Ok(())
    }
}

/// `L_j^{(k)}(y)` for `j = 0..=j_max` via the three-term recurrence.
fn laguerre_column(k: usize, y: f64, j_max: usize) -> Vec<f64> {
    let kf = k as f64;
    let mut l = Vec::with_capacity(j_max + 1);
    l.push(1.0);
    if j_max >= 1 {
        l.push(1.0 + kf - y);
    }
    for j in 1..j_max {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - y) * l[j] - (jf + kf) * l[j - 1]) / (jf + 1.0);
        l.push(next);
    }
    l
}

/// Wigner function at one phase-space point, by the Fock-basis Laguerre
/// expansion. With `α = (x + ip)/√2`:
///
/// ```text
/// W = (1/π) e^{−2|α|²} Σ_m (−1)^m [ ρ_mm L_m(4|α|²)
///       + 2 Σ_{n>m} Re( ρ_mn (2α)^{n−m} √(m!/n!) L_m^{(n−m)}(4|α|²) ) ]
/// ```
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let d = rho.dim();
    let alpha = Complex64::new(x, p) / std::f64::consts::SQRT_2;
    let y = 4.0 * alpha.norm_sqr();
    let two_alpha = alpha * 2.0;
    let mut acc = 0.0;
    for k in 0..d {
        let lag = laguerre_column(k, y, d - 1 - k);
        for m in 0..(d - k) {
            let n = m + k;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 {
                acc += sign * rho.get(m, m).re * lag[m];
            } else {
                // (2α)^k √(m!/n!) = Π_{j=m+1}^{n} 2α/√j
                let mut factor = Complex64::new(1.0, 0.0);
                for j in (m + 1)..=n {
                    factor *= two_alpha / (j as f64).sqrt();
                }
                acc += 2.0 * sign * (rho.get(m, n) * factor).re * lag[m];
            }
        }
    }
    acc * (-0.5 * y).exp() / PI
}

/// Wigner function on the lattice `xs × ps`.
pub fn wigner(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> WignerGrid {
    use rayon::prelude::*;
    let values: Vec<f64> = xs
        .par_iter()
        .flat_map_iter(|&x| ps.iter().map(move |&p| wigner_point(rho, x, p)))
        .collect();
    WignerGrid { xs: xs.to_vec(), ps: ps.to_vec(), values }
}
