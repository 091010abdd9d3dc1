//! From a heralded state to a tomography dataset.
//!
//! The heralded state occupies one temporal mode of the homodyne photocurrent
//! and every orthogonal mode is vacuum. Quadratures can be sampled directly
//! ([`QuadratureSampler`]) or embedded into full 5 GS/s photocurrent segments
//! ([`synthesize_record`]) and recovered by temporal-mode filtering.

mod acquisition;
mod autocorr;
pub mod io;
mod mode;
mod phase_inference;
mod sampler;
mod sweep;

pub use acquisition::{acquire, Acquisition, AcquisitionPlan};
pub use autocorr::{extract_mode_from_autocorrelation, AutocorrelationAccumulator, ModeExtraction};
pub use mode::{
    double_sided_exponential_mode, mode_filter, synthesize_record, HomodyneRecord, TemporalMode,
    RECORD_DT, RECORD_SAMPLES,
};
pub use phase_inference::{infer_sweep_phases, PhaseEstimate};
pub use sampler::{sample_quadrature, QuadratureSampler, SAMPLER_DX, THETA_BIN};
pub use sweep::{sweep_phase_at, SweepPhase, SweepSchedule};

use serde::{Deserialize, Serialize};

/// One phase-tagged quadrature value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub segment_id: u64,
    /// Local-oscillator phase in `[0, 2π)`.
    pub phase: f64,
    /// Quadrature value, vacuum variance 1/2.
    pub value: f64,
}
