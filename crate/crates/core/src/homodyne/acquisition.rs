use rand::Rng;
use rayon::prelude::*;

use super::{synthesize_record, HomodyneRecord, QuadratureSample, QuadratureSampler, SweepPhase, SweepSchedule, TemporalMode};
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::rng::{stream, Stream};

/// How many heralded segments to collect and when they occur.
#[derive(Debug, Clone)]
pub struct AcquisitionPlan {
    pub segments: usize,
    /// Herald click rate, Hz.
    pub trigger_rate_hz: f64,
    pub schedule: SweepSchedule,
    /// Synthesize full photocurrent records in this mode.
    pub record_mode: Option<TemporalMode>,
    /// Records are synthesized for the first `max_records` segments only.
    pub max_records: usize,
}

impl AcquisitionPlan {
    pub fn new(segments: usize, trigger_rate_hz: f64, schedule: SweepSchedule) -> Self {
        Self { segments, trigger_rate_hz, schedule, record_mode: None, max_records: usize::MAX }
    }

    /// Triggers falling inside one measurement window.
    pub fn events_per_window(&self) -> usize {
        (self.trigger_rate_hz * self.schedule.measure_interval()).round().max(1.0) as usize
    }

    fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.trigger_rate_hz > 0.0) || !self.trigger_rate_hz.is_finite() {
            return Err(Error::Config(format!("trigger rate {} must be positive", self.trigger_rate_hz)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Acquisition {
    /// Time-ordered; `segment_id` equals the position.
    pub samples: Vec<QuadratureSample>,
    /// Trigger time of each segment since the start of the run, seconds.
    pub trigger_times: Vec<f64>,
    pub records: Option<Vec<HomodyneRecord>>,
}

fn trigger_times(plan: &AcquisitionPlan, seed: u64) -> Vec<f64> {
    let per_window = plan.events_per_window();
    let windows = plan.segments.div_ceil(per_window);
    let (period, lock, measure) = (plan.schedule.period(), plan.schedule.lock_interval(), plan.schedule.measure_interval());
    let mut times = Vec::with_capacity(plan.segments);
    for w in 0..windows {
        let count = per_window.min(plan.segments - times.len());
        let mut rng = stream(seed, Stream::Trigger, w as u64);
        let start = w as f64 * period + lock;
        let mut window: Vec<f64> = (0..count).map(|_| start + measure * rng.random::<f64>()).collect();
        window.sort_by(f64::total_cmp);
        times.extend(window);
    }
    times
}

/// Simulate a heralded acquisition of `rho`: triggers during the sweep's
/// measurement windows, one phase-tagged quadrature per trigger, and
/// optionally the full photocurrent segment around each trigger.
pub fn acquire(rho: &DensityMatrix, plan: &AcquisitionPlan, seed: u64) -> Result<Acquisition> {
    plan.validate()?;
    let times = trigger_times(plan, seed);
    let segments: Vec<(u64, f64)> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let phase = match super::sweep_phase_at(t, &plan.schedule) {
                SweepPhase::Phase(p) => p,
                // a trigger exactly on the window edge
                SweepPhase::Locked => 0.0,
            };
            (i as u64, phase)
        })
        .collect();
    let sampler = QuadratureSampler::new(rho);
    let values = sampler.sample_segments(&segments, seed);
    let samples: Vec<QuadratureSample> = segments
        .iter()
        .zip(&values)
        .map(|(&(segment_id, phase), &value)| QuadratureSample { segment_id, phase, value })
        .collect();
    let records = match &plan.record_mode {
        None => None,
        Some(mode) => {
            let n = plan.max_records.min(samples.len());
            let recs = samples[..n]
                .par_iter()
                .zip(times[..n].par_iter())
                .map(|(s, &t0)| {
                    let mut rng = stream(seed, Stream::RecordNoise, s.segment_id);
                    synthesize_record(s.value, mode, t0, s.phase, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            Some(recs)
        }
    };
    Ok(Acquisition { samples, trigger_times: times, records })
}
