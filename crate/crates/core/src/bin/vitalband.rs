use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vitalband::config::Config;
use vitalband::error::{Error, Result};
use vitalband::pipeline::{
    process_patient, run_cohort, write_synthetic_dataset, write_with, ChartSelection, PatientDir, PatientSource,
    RunOptions,
};
use vitalband::quality::{apply_cascade, FilterConfig, QualityAccumulator, QualitySummary};
use vitalband::render::{ChartKind, DateMode};

#[derive(Parser, Debug)]
#[command(name = "vitalband", version, about = "Hourly heat maps and bar charts from 1 Hz wearable vital signs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Patient directory (patients.csv plus <id>_samples.csv files).
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Restrict to one patient of the input directory.
    #[arg(long, global = true)]
    patient: Option<String>,

    /// Minimum device quality (0..=100) a sample needs to be kept.
    #[arg(long, global = true, allow_negative_numbers = true)]
    quality_threshold: Option<i64>,

    /// Local time offset from UTC in hours.
    #[arg(long, global = true, allow_negative_numbers = true)]
    timezone_offset: Option<f64>,

    /// Label the time axis with admission days instead of calendar dates.
    #[arg(long, global = true)]
    anonymize_dates: bool,

    /// Seed of the synthetic cohort.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Size of the synthetic cohort.
    #[arg(long, global = true)]
    patients: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic cohort as CSV plus its ground truth.
    Synth,
    /// Parse the input directory and list diagnostics.
    Validate,
    /// Apply the quality cascade and write filtered samples.
    Filter,
    /// Per-signal mean quality before and after filtering.
    QualityReport,
    /// Write hourly means per patient.
    Aggregate,
    /// Render per-patient charts.
    Render {
        #[arg(long, value_enum, default_value_t = ChartArg::Both)]
        chart: ChartArg,
    },
    /// Cohort statistics and summary charts.
    Cohort,
    /// Everything: charts, hourly CSVs and cohort outputs. Uses the
    /// synthetic cohort unless --input is given.
    Pipeline {
        #[arg(long, value_enum, default_value_t = ChartArg::Both)]
        chart: ChartArg,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ChartArg {
    Heatmap,
    Bars,
    Both,
}

impl From<ChartArg> for ChartSelection {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Heatmap => ChartSelection::only(ChartKind::Heatmap),
            ChartArg::Bars => ChartSelection::only(ChartKind::Bars),
            ChartArg::Both => ChartSelection::BOTH,
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(t) = cli.quality_threshold {
        let keep = cfg.filter;
        cfg.filter = FilterConfig {
            quality_threshold: FilterConfig::with_threshold(t)?.quality_threshold,
            ..keep
        };
    }
    if let Some(h) = cli.timezone_offset {
        cfg.timezone_offset_hours = h;
        cfg.patient_timezones.clear();
    }
    if cli.anonymize_dates {
        cfg.layout.date_mode = DateMode::Anonymized;
    }
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
    }
    if let Some(n) = cli.patients {
        cfg.synth.patients = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn input_dir(cli: &Cli) -> Result<PatientDir> {
    let dir = cli
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("this subcommand needs --input <dir>".into()))?;
    PatientDir::open(dir)?.select(cli.patient.as_deref())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out: &Path = &cli.out;
    match &cli.command {
        Command::Synth => {
            let truths = write_synthetic_dataset(&cfg.synth, out)?;
            log::info!("wrote {} synthetic patients to {}", truths.len(), out.display());
        }
        Command::Validate => {
            let dir = input_dir(cli)?;
            let mut report = Vec::new();
            for meta in &dir.patients {
                let (record, diags) = dir.load(meta, &cfg)?;
                for d in &diags {
                    log::warn!("{}: {d}", meta.patient_id);
                }
                report.push(serde_json::json!({
                    "patient_id": meta.patient_id,
                    "samples": record.sample_count(),
                    "diagnostics": diags.iter().map(ToString::to_string).collect::<Vec<_>>(),
                }));
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Filter | Command::QualityReport => {
            let dir = input_dir(cli)?;
            let write_samples = matches!(cli.command, Command::Filter);
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let mut before = QualityAccumulator::default();
            let mut after = QualityAccumulator::default();
            for meta in &dir.patients {
                let (record, diags) = dir.load(meta, &cfg)?;
                for d in &diags {
                    log::warn!("{}: {d}", meta.patient_id);
                }
                before.add_record(&record);
                let filtered = apply_cascade(record, &cfg.filter);
                after.add_record(&filtered);
                if write_samples {
                    let path = out.join(format!("{}_filtered.csv", meta.patient_id));
                    write_with(&path, |w| filtered.write_csv(w))?;
                }
            }
            let summary = QualitySummary::from_accumulators(&before, &after);
            write_with(&out.join("quality_report.csv"), |w| summary.write_csv(w))?;
        }
        Command::Aggregate => {
            let dir = input_dir(cli)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            for meta in &dir.patients {
                let (record, _) = dir.load(meta, &cfg)?;
                let done = process_patient(record, &[], &cfg, ChartSelection::NONE)?;
                for w in &done.warnings {
                    log::warn!("{}: {w}", done.patient_id);
                }
                let path = out.join(format!("{}_hourly.csv", done.patient_id));
                write_with(&path, |w| done.grid.write_csv(w))?;
            }
        }
        Command::Render { chart } => {
            let source = PatientSource::Directory(input_dir(cli)?);
            let opts = RunOptions {
                charts: (*chart).into(),
                hourly_csv: false,
                cohort_outputs: false,
            };
            run_cohort(&source, &cfg, out, &opts)?;
        }
        Command::Cohort => {
            let source = PatientSource::Directory(input_dir(cli)?);
            let opts = RunOptions {
                charts: ChartSelection::NONE,
                hourly_csv: false,
                cohort_outputs: true,
            };
            run_cohort(&source, &cfg, out, &opts)?;
        }
        Command::Pipeline { chart } => {
            let source = match cli.input {
                Some(_) => PatientSource::Directory(input_dir(cli)?),
                None => PatientSource::Synthetic(cfg.synth.clone()),
            };
            let opts = RunOptions {
                charts: (*chart).into(),
                hourly_csv: true,
                cohort_outputs: true,
            };
            let run = run_cohort(&source, &cfg, out, &opts)?;
            log::info!("processed {} patients into {}", run.patients.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VITALBAND_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code: u8 = match e {
                Error::Config(_) => 2,
                _ => 1,
            };
            let report = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": code,
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
