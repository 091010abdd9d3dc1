//! `heraldkit` command-line driver.
//!
//! Every subcommand reads one TOML config (defaults fill anything missing),
//! applies the global flag overrides and writes its outputs, together with
//! the resolved config and a provenance file, into the output directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heraldkit::config::PipelineConfig;
use heraldkit::homodyne::io::{read_dataset_file, read_records_file};
use heraldkit::opo::OpoType;
use heraldkit::pipeline;
use heraldkit::Error;

#[derive(Parser, Debug)]
#[command(name = "heraldkit", version, about = "Heralded non-Gaussian state simulation and homodyne tomography")]
struct Cli {
    /// Pipeline config (TOML). Missing sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Squeezing and anti-squeezing spectra for each configured pump power.
    Spectra,
    /// Heralded state before and after detection loss.
    Prepare {
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
    },
    /// Phase-tagged quadrature dataset from a prepared state.
    Sample {
        /// State JSON; defaults to `state_detected.json` in the output directory.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Also synthesize full homodyne records.
        #[arg(long)]
        records: bool,
    },
    /// Maximum-likelihood reconstruction, uncorrected and loss-corrected.
    Tomo {
        /// Dataset CSV; defaults to `dataset.csv` in the output directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Temporal mode extraction from a record store.
    Modes {
        /// Record store; defaults to `records.hrv` in the output directory.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// prepare, sample and tomo in one run.
    Report {
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScenarioArg {
    SinglePhoton,
    Kitten,
}

impl ScenarioArg {
    fn opo_type(self) -> OpoType {
        match self {
            ScenarioArg::SinglePhoton => OpoType::TypeII,
            ScenarioArg::Kitten => OpoType::TypeI,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged(_) => 4,
        e if e.is_physics() => 3,
        _ => 2,
    }
}

fn resolve(cli: &Cli) -> heraldkit::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.output_dir = out.clone();
    }
    if let Command::Prepare { scenario: Some(s) } | Command::Report { scenario: Some(s) } = &cli.command {
        cfg.opo.opo_type = s.opo_type();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn input(given: &Option<PathBuf>, out: &Path, default: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| out.join(default))
}

fn run(cli: &Cli) -> heraldkit::Result<()> {
    let cfg = resolve(cli)?;
    let out = cfg.run.output_dir.clone();
    match &cli.command {
        Command::Spectra => {
            let rows = pipeline::cmd_spectra(&cfg, &out)?;
            println!("spectra: {} rows -> {}", rows.len(), out.join(pipeline::SPECTRA).display());
        }
        Command::Prepare { .. } => {
            let p = pipeline::cmd_prepare(&cfg, &out)?;
            let pops = p.detected.populations();
            println!(
                "prepare: {:?}, success probability {:.3e}, detected p0 {:.4} p1 {:.4} p2 {:.4}",
                p.scenario, p.success_probability, pops[0], pops[1], pops[2]
            );
        }
        Command::Sample { state, records } => {
            let rho = pipeline::load_state(&input(state, &out, pipeline::STATE_DETECTED))?;
            let acq = pipeline::cmd_sample(&cfg, &rho, &out, *records)?;
            let n_records = acq.records.as_ref().map_or(0, Vec::len);
            println!("sample: {} samples, {n_records} records -> {}", acq.samples.len(), out.display());
        }
        Command::Tomo { dataset } => {
            let samples = read_dataset_file(&input(dataset, &out, pipeline::DATASET))?;
            let o = pipeline::cmd_tomo(&cfg, samples, &out)?;
            println!(
                "tomo: uncorrected p1 {:.4} W(0,0) {:.4}; corrected (η = {:.3}) p1 {:.4} W(0,0) {:.4}",
                o.uncorrected.populations[1], o.uncorrected.w00, o.corrected.eta, o.corrected.populations[1], o.corrected.w00
            );
        }
        Command::Modes { records } => {
            let recs = read_records_file(&input(records, &out, pipeline::RECORDS))?;
            let m = pipeline::cmd_modes(&cfg, &recs, &out)?;
            println!("modes: overlap {:.4}, leading eigenvalue {:.4}", m.overlap, m.leading_eigenvalue);
        }
        Command::Report { .. } => {
            let s = pipeline::cmd_report(&cfg, &out)?;
            println!(
                "report: {:?}, uncorrected p1 {:.4}, corrected p1 {:.4}, uncorrected W(0,0) {:.4} -> {}",
                s.scenario, s.uncorrected_populations[1], s.corrected_populations[1], s.uncorrected_w00, out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
