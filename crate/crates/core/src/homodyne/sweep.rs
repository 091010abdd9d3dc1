use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sawtooth LO-phase sweep: a lock interval followed by one linear,
/// one-directional ramp across the measurement interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSchedule {
    pub sweep_frequency_hz: f64,
    pub duty_cycle: f64,
    /// Phase covered by one measurement window, radians.
    pub phase_span: f64,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        Self { sweep_frequency_hz: 10.0, duty_cycle: 0.9, phase_span: PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPhase {
    Locked,
    Phase(f64),
}

impl SweepSchedule {
    pub fn period(&self) -> f64 {
        1.0 / self.sweep_frequency_hz
    }

    pub fn measure_interval(&self) -> f64 {
        self.period() * self.duty_cycle
    }

    pub fn lock_interval(&self) -> f64 {
        self.period() - self.measure_interval()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sweep_frequency_hz > 0.0) || !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::Config(format!(
                "invalid sweep: {} Hz, duty cycle {}",
                self.sweep_frequency_hz, self.duty_cycle
            )));
        }
        if !(self.phase_span > 0.0 && self.phase_span <= 2.0 * PI) {
            return Err(Error::Config(format!("phase span {} outside (0, 2π]", self.phase_span)));
        }
        Ok(())
    }
}

/// LO phase at time `t` (seconds since the start of the first lock interval).
pub fn sweep_phase_at(t: f64, schedule: &SweepSchedule) -> SweepPhase {
    let within = t.rem_euclid(schedule.period());
    let lock = schedule.lock_interval();
    if within < lock {
        return SweepPhase::Locked;
    }
    let frac = (within - lock) / schedule.measure_interval();
    SweepPhase::Phase((frac * schedule.phase_span).rem_euclid(2.0 * PI))
}
