//! Config-driven batch commands behind the CLI.
//!
//! Every command writes into an output directory together with the resolved
//! config (`config_resolved.toml`) and `provenance.json`. Outputs depend only
//! on the config and seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{loss_apply, EfficiencyBreakdown};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fock::{photon_statistics, wigner_point, DensityMatrix};
use crate::herald::{herald_single_photon, subtract_photon};
use crate::homodyne::{
    acquire, double_sided_exponential_mode, extract_mode_from_autocorrelation, io, mode_filter, Acquisition,
    AcquisitionPlan, HomodyneRecord, QuadratureSample, TemporalMode, RECORD_DT, RECORD_SAMPLES,
};
use crate::opo::{squeezed_vacuum_state, squeezing_spectrum, tmsv_state, OpoType};
use crate::tomography::{bootstrap, mle_reconstruct, tomography_report, BootstrapSummary, TomographyDataset, TomographyReport};

pub const CONFIG_ECHO: &str = "config_resolved.toml";
pub const PROVENANCE: &str = "provenance.json";
pub const STATE_IDEAL: &str = "state_ideal.json";
pub const STATE_DETECTED: &str = "state_detected.json";
pub const DATASET: &str = "dataset.csv";
pub const RECORDS: &str = "records.hrv";
pub const SPECTRA: &str = "spectra.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Type-II OPO, click on the idler.
    SinglePhoton,
    /// Type-I OPO, photon subtraction from squeezed vacuum.
    Kitten,
}

impl Scenario {
    pub fn of(cfg: &PipelineConfig) -> Self {
        match cfg.opo.opo_type {
            OpoType::TypeII => Scenario::SinglePhoton,
            OpoType::TypeI => Scenario::Kitten,
        }
    }
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    version: &'a str,
    seed: u64,
    scenario: Scenario,
    escape_efficiency: Option<f64>,
    pump_parameter: Option<f64>,
    halfwidth_hz: f64,
    false_click_fraction: f64,
    detection: EfficiencyBreakdown,
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// Write the resolved config and the toolkit version into `out`.
pub fn write_provenance(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    create_out(out)?;
    fs::write(out.join(CONFIG_ECHO), cfg.to_toml()?)?;
    let opo = cfg.opo.opo_config();
    let prov = Provenance {
        version: crate::VERSION,
        seed: cfg.run.seed,
        scenario: Scenario::of(cfg),
        escape_efficiency: opo.escape_efficiency().ok(),
        pump_parameter: opo.pump_parameter().ok(),
        halfwidth_hz: cfg.opo.halfwidth_hz(),
        false_click_fraction: cfg.herald.false_click_fraction(),
        detection: cfg.detection.breakdown(),
    };
    write_json(&out.join(PROVENANCE), &prov)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One row of `spectra.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub pump_mw: f64,
    pub freq_hz: f64,
    pub s_minus_db: f64,
    pub s_plus_db: f64,
}

/// Squeezing and anti-squeezing spectra for every configured pump power,
/// seen through escape and detection efficiency.
pub fn spectra(cfg: &PipelineConfig) -> Result<Vec<SpectrumRow>> {
    let pumps = if cfg.run.spectra_pumps_mw.is_empty() { vec![cfg.opo.pump_mw] } else { cfg.run.spectra_pumps_mw.clone() };
    let escape = cfg.opo.opo_config().escape_efficiency()?;
    let eta = escape * cfg.detection.efficiency();
    let gamma = cfg.opo.halfwidth_hz();
    let n = cfg.run.spectra_points;
    let mut rows = Vec::with_capacity(pumps.len() * n);
    for pump in pumps {
        let sigma = cfg.opo.opo_config_at(pump).pump_parameter()?;
        for i in 0..n {
            let f = cfg.run.spectra_max_hz * i as f64 / (n - 1) as f64;
            let s = squeezing_spectrum(f, sigma, gamma, eta)?;
            rows.push(SpectrumRow { pump_mw: pump, freq_hz: f, s_minus_db: s.squeezed_db(), s_plus_db: s.anti_squeezed_db() });
        }
    }
    Ok(rows)
}

pub fn cmd_spectra(cfg: &PipelineConfig, out: &Path) -> Result<Vec<SpectrumRow>> {
    let rows = spectra(cfg)?;
    write_provenance(cfg, out)?;
    let mut w = BufWriter::new(File::create(out.join(SPECTRA))?);
    writeln!(w, "pump_mw,freq_hz,s_minus_db,s_plus_db")?;
    for r in &rows {
        writeln!(w, "{},{},{},{}", r.pump_mw, r.freq_hz, r.s_minus_db, r.s_plus_db)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Heralded state before (`ideal`) and after (`detected`) homodyne detection loss.
#[derive(Debug, Clone)]
pub struct PreparedStates {
    pub scenario: Scenario,
    pub ideal: DensityMatrix,
    pub detected: DensityMatrix,
    pub success_probability: f64,
    pub escape_efficiency: f64,
    pub detection_efficiency: f64,
}

/// OPO resource, escape loss, heralding, then detection loss.
pub fn prepare_states(cfg: &PipelineConfig) -> Result<PreparedStates> {
    let opo = cfg.opo.opo_config();
    opo.validate()?;
    let escape = opo.escape_efficiency()?;
    let herald = cfg.herald.herald_config();
    let cutoff = cfg.run.fock_cutoff;
    let scenario = Scenario::of(cfg);
    let (ideal, success_probability) = match scenario {
        Scenario::SinglePhoton => {
            let resource = tmsv_state(cfg.opo.lambda()?, cutoff)?;
            let heralded = herald_single_photon(&resource, &herald)?;
            (loss_apply(&heralded.state, escape)?, heralded.success_probability)
        }
        Scenario::Kitten => {
            let resource = squeezed_vacuum_state(cfg.opo.squeezing_parameter()?, cutoff)?;
            let emitted = loss_apply(&resource, escape)?;
            let heralded = subtract_photon(&emitted, &herald)?;
            (heralded.state, heralded.success_probability)
        }
    };
    let detection_efficiency = cfg.detection.efficiency();
    let detected = loss_apply(&ideal, detection_efficiency)?;
    Ok(PreparedStates { scenario, ideal, detected, success_probability, escape_efficiency: escape, detection_efficiency })
}

#[derive(Debug, Serialize)]
struct StateSummary {
    populations: Vec<f64>,
    parity: f64,
    w00: f64,
}

impl StateSummary {
    fn of(rho: &DensityMatrix) -> Self {
        let stats = photon_statistics(rho);
        Self { populations: stats.populations.into_iter().take(8).collect(), parity: stats.parity, w00: wigner_point(rho, 0.0, 0.0) }
    }
}

#[derive(Debug, Serialize)]
struct PrepareSummary {
    scenario: Scenario,
    success_probability: f64,
    escape_efficiency: f64,
    detection_efficiency: f64,
    ideal: StateSummary,
    detected: StateSummary,
}

pub fn cmd_prepare(cfg: &PipelineConfig, out: &Path) -> Result<PreparedStates> {
    let prepared = prepare_states(cfg)?;
    write_provenance(cfg, out)?;
    fs::write(out.join(STATE_IDEAL), prepared.ideal.to_json()?)?;
    fs::write(out.join(STATE_DETECTED), prepared.detected.to_json()?)?;
    write_json(
        &out.join("prepare.json"),
        &PrepareSummary {
            scenario: prepared.scenario,
            success_probability: prepared.success_probability,
            escape_efficiency: prepared.escape_efficiency,
            detection_efficiency: prepared.detection_efficiency,
            ideal: StateSummary::of(&prepared.ideal),
            detected: StateSummary::of(&prepared.detected),
        },
    )?;
    Ok(prepared)
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::from_json(&fs::read_to_string(path)?)
}

/// Temporal mode of the heralded photon: double-sided exponential at the
/// configured half-width.
pub fn heralded_mode(cfg: &PipelineConfig) -> Result<TemporalMode> {
    double_sided_exponential_mode(2.0 * std::f64::consts::PI * cfg.mode_halfwidth_hz(), RECORD_DT, RECORD_SAMPLES)
}

pub fn sample(cfg: &PipelineConfig, state: &DensityMatrix, with_records: bool) -> Result<Acquisition> {
    state.check_normalized()?;
    let mut plan = AcquisitionPlan::new(cfg.run.samples, cfg.trigger_rate_hz(), cfg.homodyne.schedule());
    if with_records {
        plan.record_mode = Some(heralded_mode(cfg)?);
        plan.max_records = cfg.homodyne.record_count;
    }
    acquire(state, &plan, cfg.run.seed)
}

pub fn cmd_sample(cfg: &PipelineConfig, state: &DensityMatrix, out: &Path, with_records: bool) -> Result<Acquisition> {
    let acq = sample(cfg, state, with_records)?;
    write_provenance(cfg, out)?;
    io::write_dataset_file(&acq.samples, &out.join(DATASET))?;
    if let Some(records) = &acq.records {
        io::write_records_file(records, &out.join(RECORDS))?;
    }
    Ok(acq)
}

/// Uncorrected and loss-corrected reconstructions of one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct TomographyOutcome {
    pub uncorrected: TomographyReport,
    pub corrected: TomographyReport,
    pub uncorrected_bootstrap: Option<BootstrapSummary>,
    pub corrected_bootstrap: Option<BootstrapSummary>,
}

impl TomographyOutcome {
    pub fn converged(&self) -> bool {
        self.uncorrected.converged && self.corrected.converged
    }
}

/// Reconstruct at `η = 1` and at the configured detection efficiency.
/// Reports are produced even when the iteration cap is hit; check
/// [`TomographyOutcome::converged`].
pub fn tomography(cfg: &PipelineConfig, samples: Vec<QuadratureSample>) -> Result<TomographyOutcome> {
    let data = TomographyDataset::new(samples, cfg.binning())?;
    let opts = cfg.mle_options();
    let mut report_opts = cfg.report_options();
    report_opts.allow_unconverged = true;
    let eta = cfg.detection.efficiency();
    let run = |eta: f64| -> Result<(TomographyReport, Option<BootstrapSummary>)> {
        let res = mle_reconstruct(&data, eta, &opts)?;
        let report = tomography_report(&res, &report_opts)?;
        let bs = match cfg.tomography.bootstrap_replicas {
            0 => None,
            n => Some(bootstrap(&data, eta, &opts, n, cfg.run.seed)?),
        };
        Ok((report, bs))
    };
    let (uncorrected, uncorrected_bootstrap) = run(1.0)?;
    let (corrected, corrected_bootstrap) = run(eta)?;
    Ok(TomographyOutcome { uncorrected, corrected, uncorrected_bootstrap, corrected_bootstrap })
}

fn write_reconstruction(out: &Path, tag: &str, report: &TomographyReport, bs: &Option<BootstrapSummary>) -> Result<()> {
    fs::write(out.join(format!("rho_{tag}.json")), report.rho.to_json()?)?;
    report.wigner.write_csv(BufWriter::new(File::create(out.join(format!("wigner_{tag}.csv")))?))?;
    #[derive(Serialize)]
    struct Json<'a> {
        #[serde(flatten)]
        report: &'a TomographyReport,
        bootstrap: &'a Option<BootstrapSummary>,
    }
    write_json(&out.join(format!("report_{tag}.json")), &Json { report, bootstrap: bs })
}

pub fn cmd_tomo(cfg: &PipelineConfig, samples: Vec<QuadratureSample>, out: &Path) -> Result<TomographyOutcome> {
    let outcome = tomography(cfg, samples)?;
    write_provenance(cfg, out)?;
    write_reconstruction(out, "uncorrected", &outcome.uncorrected, &outcome.uncorrected_bootstrap)?;
    write_reconstruction(out, "corrected", &outcome.corrected, &outcome.corrected_bootstrap)?;
    if !outcome.converged() && !cfg.tomography.allow_unconverged {
        return Err(Error::NotConverged(format!(
            "iterations: uncorrected {}, corrected {} (cap {})",
            outcome.uncorrected.iterations, outcome.corrected.iterations, cfg.tomography.max_iterations
        )));
    }
    Ok(outcome)
}

/// Filter output variance for a detuned temporal mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchRow {
    /// Filter half-width relative to the configured one.
    pub halfwidth_scale: f64,
    pub overlap: f64,
    pub variance: f64,
    /// `c²·V + (1 − c²)/2` with `V` the matched-filter variance.
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModesOutcome {
    pub records: usize,
    pub overlap: f64,
    pub ambiguous: bool,
    pub leading_eigenvalue: f64,
    pub vacuum_edge: f64,
    pub matched_variance: f64,
    pub mismatch: Vec<MismatchRow>,
    #[serde(skip)]
    pub mode: TemporalMode,
    #[serde(skip)]
    pub eigenvalues: Vec<f64>,
}

pub const MISMATCH_SCALES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Extract the leading autocorrelation mode of `records` and compare it, and a
/// family of detuned filters, with the configured double-sided exponential.
pub fn modes(cfg: &PipelineConfig, records: &[HomodyneRecord]) -> Result<ModesOutcome> {
    let ex = extract_mode_from_autocorrelation(records)?;
    let reference = heralded_mode(cfg)?;
    if reference.len() != ex.mode.len() {
        return Err(Error::Contract(format!("records have {} samples, expected {}", ex.mode.len(), reference.len())));
    }
    let filtered = |g: &TemporalMode| -> Result<Vec<f64>> { records.iter().map(|r| mode_filter(r, g)).collect() };
    let matched_variance = variance(&filtered(&reference)?);
    let gamma = 2.0 * std::f64::consts::PI * cfg.mode_halfwidth_hz();
    let mismatch = MISMATCH_SCALES
        .iter()
        .map(|&s| {
            let g = double_sided_exponential_mode(gamma * s, RECORD_DT, RECORD_SAMPLES)?;
            let c = g.overlap(&reference);
            Ok(MismatchRow {
                halfwidth_scale: s,
                overlap: c,
                variance: variance(&filtered(&g)?),
                predicted: c * c * matched_variance + (1.0 - c * c) * 0.5,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ModesOutcome {
        records: records.len(),
        overlap: ex.mode.overlap(&reference).abs(),
        ambiguous: ex.ambiguous,
        leading_eigenvalue: ex.eigenvalues[0],
        vacuum_edge: ex.vacuum_edge(),
        matched_variance,
        mismatch,
        mode: ex.mode,
        eigenvalues: ex.eigenvalues,
    })
}

pub fn cmd_modes(cfg: &PipelineConfig, records: &[HomodyneRecord], out: &Path) -> Result<ModesOutcome> {
    let outcome = modes(cfg, records)?;
    write_provenance(cfg, out)?;
    let reference = heralded_mode(cfg)?;
    let mut w = BufWriter::new(File::create(out.join("mode.csv"))?);
    writeln!(w, "index,t_ns,extracted,reference")?;
    for (i, (a, b)) in outcome.mode.values().iter().zip(reference.values()).enumerate() {
        writeln!(w, "{i},{},{a},{b}", i as f64 * RECORD_DT * 1e9)?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(out.join("eigenvalues.csv"))?);
    writeln!(w, "index,eigenvalue")?;
    for (i, l) in outcome.eigenvalues.iter().enumerate() {
        writeln!(w, "{i},{l}")?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(out.join("mismatch.csv"))?);
    writeln!(w, "halfwidth_scale,overlap,variance,predicted")?;
    for r in &outcome.mismatch {
        writeln!(w, "{},{},{},{}", r.halfwidth_scale, r.overlap, r.variance, r.predicted)?;
    }
    w.flush()?;
    write_json(&out.join("modes.json"), &outcome)?;
    if outcome.ambiguous {
        return Err(Error::AmbiguousMode(format!(
            "leading eigenvalue {:.4} vs vacuum edge {:.4}",
            outcome.leading_eigenvalue, outcome.vacuum_edge
        )));
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub samples: usize,
    pub success_probability: f64,
    pub detection_efficiency: f64,
    pub ideal_populations: Vec<f64>,
    pub uncorrected_populations: Vec<f64>,
    pub corrected_populations: Vec<f64>,
    pub uncorrected_w00: f64,
    pub corrected_w00: f64,
    pub uncorrected_css_fidelity: f64,
    pub corrected_css_fidelity: f64,
    pub converged: bool,
}

/// Prepare, sample and reconstruct in one go, writing every intermediate file.
pub fn cmd_report(cfg: &PipelineConfig, out: &Path) -> Result<RunSummary> {
    let prepared = cmd_prepare(cfg, out)?;
    let acq = cmd_sample(cfg, &prepared.detected, out, false)?;
    let samples = acq.samples.len();
    let outcome = cmd_tomo(cfg, acq.samples, out);
    let outcome = match outcome {
        Ok(o) => o,
        Err(Error::NotConverged(msg)) => {
            log::error!("{msg}");
            return Err(Error::NotConverged(msg));
        }
        Err(e) => return Err(e),
    };
    let summary = RunSummary {
        version: crate::VERSION.to_string(),
        scenario: prepared.scenario,
        seed: cfg.run.seed,
        samples,
        success_probability: prepared.success_probability,
        detection_efficiency: prepared.detection_efficiency,
        ideal_populations: prepared.ideal.populations().into_iter().take(cfg.tomography.cutoff + 1).collect(),
        uncorrected_populations: outcome.uncorrected.populations.clone(),
        corrected_populations: outcome.corrected.populations.clone(),
        uncorrected_w00: outcome.uncorrected.w00,
        corrected_w00: outcome.corrected.w00,
        uncorrected_css_fidelity: outcome.uncorrected.fidelities.css.fidelity,
        corrected_css_fidelity: outcome.corrected.fidelities.css.fidelity,
        converged: outcome.converged(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
