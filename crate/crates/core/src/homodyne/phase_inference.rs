use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Samples per variance window.
pub const PHASE_WINDOW: usize = 2000;
/// Hysteresis before the folded phase is allowed to reverse direction.
const TURN_HYSTERESIS: f64 = 0.2;

/// Variance-based LO phase estimate at one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    /// Index of the window centre in the input sequence.
    pub centre: usize,
    pub variance: f64,
    pub phase: f64,
}

/// Infer the LO phase along one monotone sweep from a time-ordered run of
/// quadrature values of a squeezed state with known extreme variances.
///
/// Each window variance is inverted through `V(θ) = vmin cos²θ + vmax sin²θ`.
/// That only yields θ folded into `[0, π/2]`; because the sweep moves in one
/// direction the folded phase is unwrapped at each turning point. The window
/// length and hysteresis are heuristics, not a lab calibration.
pub fn infer_sweep_phases(values: &[f64], vmin: f64, vmax: f64, stride: usize) -> Result<Vec<PhaseEstimate>> {
    if !(vmax > vmin) || stride == 0 {
        return Err(Error::Domain(format!("need vmax > vmin and stride > 0, got {vmin}, {vmax}, {stride}")));
    }
    if values.len() < PHASE_WINDOW {
        return Err(Error::Contract(format!("need at least {PHASE_WINDOW} samples, got {}", values.len())));
    }
    let mut out = Vec::new();
    let mut branch = 0u32;
    // running extreme of the folded phase in the current branch direction
    let mut extreme: Option<f64> = None;
    let mut start = 0;
    while start + PHASE_WINDOW <= values.len() {
        let w = &values[start..start + PHASE_WINDOW];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        let cos2 = ((vmax - var) / (vmax - vmin)).clamp(0.0, 1.0);
        let folded = cos2.sqrt().acos();
        // even branches see the folded phase rise, odd branches see it fall
        let rising = branch % 2 == 0;
        let progress = if rising { folded } else { PI / 2.0 - folded };
        match extreme {
            Some(e) if progress < e - TURN_HYSTERESIS && e > PI / 2.0 - 2.0 * TURN_HYSTERESIS => {
                branch += 1;
                extreme = Some(if rising { PI / 2.0 - folded } else { folded });
            }
            Some(e) => extreme = Some(e.max(progress)),
            None => extreme = Some(progress),
        }
        let local = if branch % 2 == 0 { folded } else { PI / 2.0 - folded };
        let phase = branch as f64 * PI / 2.0 + local;
        out.push(PhaseEstimate { centre: start + PHASE_WINDOW / 2, variance: var, phase });
        start += stride;
    }
    Ok(out)
}
