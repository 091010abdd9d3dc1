//! Pipeline configuration file.
//!
//! One TOML file with sections `[opo]`, `[herald]`, `[detection]`,
//! `[homodyne]`, `[tomography]` and `[run]`. Every key has a default, so an
//! empty file describes the type-II single-photon experiment. Unknown keys are
//! rejected to catch typos.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::DetectionBudget;
use crate::error::{Error, Result};
use crate::herald::{false_click_fraction, HeraldConfig};
use crate::homodyne::SweepSchedule;
use crate::opo::{squeezing_parameter_from_db, OpoConfig, OpoType};
use crate::tomography::{Binning, MleOptions, ReportOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpoSection {
    #[serde(rename = "type")]
    pub opo_type: OpoType,
    /// Output-coupler transmission.
    #[serde(rename = "T")]
    pub transmission: f64,
    /// Round-trip intracavity loss.
    #[serde(rename = "L")]
    pub loss: f64,
    pub fsr_hz: f64,
    pub pump_mw: f64,
    pub threshold_mw: f64,
    /// Overrides the TMSV parameter `λ = σ` (type-II).
    pub lambda: Option<f64>,
    /// Overrides the squeezing of the emitted mode (type-I).
    pub squeezing_db: Option<f64>,
    /// Overrides the half-width derived from `fsr_hz`, `T` and `L`.
    pub halfwidth_hz: Option<f64>,
}

impl Default for OpoSection {
    fn default() -> Self {
        Self {
            opo_type: OpoType::TypeII,
            transmission: 0.10,
            // T/(T+L) = 0.96
            loss: 0.1 / 0.96 - 0.1,
            fsr_hz: 4.3e9,
            pump_mw: 1.0,
            threshold_mw: 80.0,
            lambda: None,
            squeezing_db: None,
            halfwidth_hz: None,
        }
    }
}

impl OpoSection {
    pub fn opo_config(&self) -> OpoConfig {
        self.opo_config_at(self.pump_mw)
    }

    pub fn opo_config_at(&self, pump_mw: f64) -> OpoConfig {
        OpoConfig {
            output_transmission: self.transmission,
            intracavity_loss: self.loss,
            fsr_hz: self.fsr_hz,
            pump_power_w: pump_mw * 1e-3,
            threshold_power_w: self.threshold_mw * 1e-3,
            opo_type: self.opo_type,
        }
    }

    pub fn halfwidth_hz(&self) -> f64 {
        self.halfwidth_hz.unwrap_or_else(|| self.opo_config().halfwidth_hz())
    }

    /// TMSV parameter for the type-II resource.
    pub fn lambda(&self) -> Result<f64> {
        match self.lambda {
            Some(l) => Ok(l),
            None => self.opo_config().pump_parameter(),
        }
    }

    /// Squeezing parameter `r` of the type-I resource.
    pub fn squeezing_parameter(&self) -> Result<f64> {
        match self.squeezing_db {
            Some(db) if db >= 0.0 => Ok(squeezing_parameter_from_db(db)),
            Some(db) => Err(Error::Config(format!("squeezing_db = {db} must be ≥ 0"))),
            None => self.opo_config().resource_squeezing_parameter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeraldSection {
    pub tap_reflectivity: f64,
    pub herald_efficiency: f64,
    pub dark_rate_hz: f64,
    pub click_rate_hz: f64,
    pub rejection_db: f64,
    /// Non-degenerate mode pairs leaking through the filters.
    pub leaking_modes: u32,
    /// Overrides the value computed from the rates.
    pub false_click_fraction: Option<f64>,
}

impl Default for HeraldSection {
    fn default() -> Self {
        Self {
            tap_reflectivity: 0.03,
            herald_efficiency: 0.05,
            dark_rate_hz: 5.0,
            click_rate_hz: 25e3,
            rejection_db: 25.0,
            leaking_modes: 0,
            false_click_fraction: None,
        }
    }
}

impl HeraldSection {
    pub fn false_click_fraction(&self) -> f64 {
        self.false_click_fraction.unwrap_or_else(|| {
            false_click_fraction(self.dark_rate_hz, self.click_rate_hz, self.rejection_db, self.leaking_modes)
        })
    }

    pub fn herald_config(&self) -> HeraldConfig {
        HeraldConfig {
            tap_reflectivity: self.tap_reflectivity,
            herald_efficiency: self.herald_efficiency,
            false_click_fraction: self.false_click_fraction(),
            rejection_db: self.rejection_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomodyneSection {
    pub sweep_frequency_hz: f64,
    pub duty_cycle: f64,
    /// LO phase covered by one measurement window, radians.
    pub phase_span: f64,
    /// Defaults to `herald.click_rate_hz`.
    pub trigger_rate_hz: Option<f64>,
    /// Photocurrent records written by `sample --records`.
    pub record_count: usize,
    /// Half-width of the temporal mode used for records; defaults to the cavity's.
    pub mode_halfwidth_hz: Option<f64>,
}

impl Default for HomodyneSection {
    fn default() -> Self {
        Self {
            sweep_frequency_hz: 10.0,
            duty_cycle: 0.9,
            phase_span: PI,
            trigger_rate_hz: None,
            record_count: 10_000,
            mode_halfwidth_hz: None,
        }
    }
}

impl HomodyneSection {
    pub fn schedule(&self) -> SweepSchedule {
        SweepSchedule { sweep_frequency_hz: self.sweep_frequency_hz, duty_cycle: self.duty_cycle, phase_span: self.phase_span }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySection {
    pub phase_bins: usize,
    pub x_bin: f64,
    pub cutoff: usize,
    pub max_iterations: usize,
    pub max_change: f64,
    pub min_gain: f64,
    pub unbinned: bool,
    /// Bootstrap replicas for population error bars; 0 disables.
    pub bootstrap_replicas: usize,
    pub grid_points: usize,
    pub grid_extent: f64,
    pub allow_unconverged: bool,
}

impl Default for TomographySection {
    fn default() -> Self {
        let b = Binning::default();
        let m = MleOptions::default();
        let r = ReportOptions::default();
        Self {
            phase_bins: b.phase_bins,
            x_bin: b.x_bin,
            cutoff: b.cutoff,
            max_iterations: m.max_iterations,
            max_change: m.max_change,
            min_gain: m.min_gain,
            unbinned: m.unbinned,
            bootstrap_replicas: 0,
            grid_points: r.grid_points,
            grid_extent: r.grid_extent,
            allow_unconverged: r.allow_unconverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    /// Heralded segments per dataset.
    pub samples: usize,
    pub output_dir: PathBuf,
    /// Fock cutoff used while preparing states.
    pub fock_cutoff: usize,
    /// Pump powers for `spectra`; empty means `opo.pump_mw`.
    pub spectra_pumps_mw: Vec<f64>,
    pub spectra_max_hz: f64,
    pub spectra_points: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            samples: 50_000,
            output_dir: PathBuf::from("out"),
            fock_cutoff: 30,
            spectra_pumps_mw: Vec::new(),
            spectra_max_hz: 50e6,
            spectra_points: 501,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub opo: OpoSection,
    pub herald: HeraldSection,
    pub detection: DetectionBudget,
    pub homodyne: HomodyneSection,
    pub tomography: TomographySection,
    pub run: RunSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Resolved config with every default written out.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Checks that do not depend on the physics (those surface when the
    /// corresponding command runs).
    pub fn validate(&self) -> Result<()> {
        let o = &self.opo;
        if !(o.transmission > 0.0) || !(o.loss >= 0.0) || !(o.fsr_hz > 0.0) || !(o.threshold_mw > 0.0) || !(o.pump_mw >= 0.0) {
            return Err(Error::Config(format!("invalid [opo] section {o:?}")));
        }
        if let Some(h) = o.halfwidth_hz {
            if !(h > 0.0) {
                return Err(Error::Config(format!("halfwidth_hz = {h} must be positive")));
            }
        }
        let h = &self.herald;
        if !(h.dark_rate_hz >= 0.0) || !(h.click_rate_hz > 0.0) {
            return Err(Error::Config("herald rates must be non-negative with a positive click rate".into()));
        }
        if let Some(w) = h.false_click_fraction {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Config(format!("false_click_fraction = {w} outside [0, 1]")));
            }
        }
        self.herald.herald_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.detection.validate()?;
        self.homodyne.schedule().validate()?;
        if let Some(r) = self.homodyne.trigger_rate_hz {
            if !(r > 0.0) {
                return Err(Error::Config(format!("trigger_rate_hz = {r} must be positive")));
            }
        }
        self.binning().validate()?;
        if self.tomography.grid_points < 2 || !(self.tomography.grid_extent > 0.0) {
            return Err(Error::Config("Wigner grid needs ≥ 2 points and a positive extent".into()));
        }
        if self.run.samples == 0 || self.run.fock_cutoff < 2 || self.run.spectra_points < 2 {
            return Err(Error::Config("run needs samples > 0, fock_cutoff ≥ 2, spectra_points ≥ 2".into()));
        }
        Ok(())
    }

    pub fn binning(&self) -> Binning {
        Binning {
            phase_bins: self.tomography.phase_bins,
            phase_span: self.homodyne.phase_span,
            x_bin: self.tomography.x_bin,
            cutoff: self.tomography.cutoff,
        }
    }

    pub fn mle_options(&self) -> MleOptions {
        let t = &self.tomography;
        MleOptions { max_iterations: t.max_iterations, max_change: t.max_change, min_gain: t.min_gain, unbinned: t.unbinned }
    }

    pub fn report_options(&self) -> ReportOptions {
        let t = &self.tomography;
        ReportOptions { grid_points: t.grid_points, grid_extent: t.grid_extent, allow_unconverged: t.allow_unconverged }
    }

    pub fn trigger_rate_hz(&self) -> f64 {
        self.homodyne.trigger_rate_hz.unwrap_or(self.herald.click_rate_hz)
    }

    pub fn mode_halfwidth_hz(&self) -> f64 {
        self.homodyne.mode_halfwidth_hz.unwrap_or_else(|| self.opo.halfwidth_hz())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = PipelineConfig::from_toml("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert!((cfg.opo.opo_config().escape_efficiency().unwrap() - 0.96).abs() < 1e-12);
        assert!((cfg.opo.lambda().unwrap().powi(2) - 0.0125).abs() < 1e-12);
        assert!((cfg.herald.false_click_fraction() - 2e-4).abs() < 1e-7);
        assert_eq!(cfg.run.samples, 50_000);
    }

    #[test]
    fn resolved_echo_round_trips() {
        let text = "[opo]\ntype = \"type-I\"\nthreshold_mw = 50\nsqueezing_db = 3.0103\n[detection]\noverall_efficiency = 0.85\n[run]\nseed = 7\n";
        let cfg = PipelineConfig::from_toml(text).unwrap();
        assert_eq!(cfg.opo.opo_type, OpoType::TypeI);
        assert!((cfg.opo.squeezing_parameter().unwrap() - 0.5f64.ln().abs() / 2.0).abs() < 1e-5);
        assert_eq!(cfg.detection.efficiency(), 0.85);
        let echo = cfg.to_toml().unwrap();
        assert_eq!(PipelineConfig::from_toml(&echo).unwrap(), cfg);
    }

    #[test]
    fn rejects_typos_and_bad_values() {
        assert!(matches!(PipelineConfig::from_toml("[opo]\npump = 3\n"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_toml("[herald]\ntap_reflectivity = 0.7\n"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_toml("[tomography]\nphase_bins = 0\n"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_toml("[run]\nseed = \"x\"\n"), Err(Error::Config(_))));
    }
}
