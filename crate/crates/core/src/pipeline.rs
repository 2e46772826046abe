//! End-to-end orchestration: raw record → cascade → hourly grid → charts,
//! and cohort runs over a directory or a synthetic cohort.
//!
//! A patient directory holds `patients.csv` (metadata), one
//! `<patient_id>_samples.csv` per patient and optionally
//! `annotations.csv`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{annotate_grid, hourly_mean, DayCounts, HourlyGrid};
use crate::cohort::{cohort_stats, render_cohort_days_chart, render_quality_chart, write_patient_days_csv, CohortStats, PatientDays};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::ingest::{build_record, parse_meta_csv, parse_samples_csv, Diagnostic, PatientMeta, PatientRecord};
use crate::quality::{apply_cascade, QualityAccumulator, QualitySummary};
use crate::render::{
    parse_annotations_csv, place_annotations, render_barchart, render_heatmap, write_annotations_csv,
    AnnotationRow, ChartKind, Svg,
};
use crate::signal::SignalId;
use crate::synth::{cohort_profiles, generate_patient, CohortSpec, GeneratedPatient, GroundTruth};

pub const META_FILE: &str = "patients.csv";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const REPORT_FILE: &str = "report.json";

pub fn samples_file_name(patient_id: &str) -> String {
    format!("{patient_id}_samples.csv")
}

/// Which charts to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartSelection {
    pub heatmap: bool,
    pub bars: bool,
}

impl ChartSelection {
    pub const BOTH: Self = Self { heatmap: true, bars: true };
    pub const NONE: Self = Self { heatmap: false, bars: false };

    pub fn only(kind: ChartKind) -> Self {
        match kind {
            ChartKind::Heatmap => Self { heatmap: true, bars: false },
            ChartKind::Bars => Self { heatmap: false, bars: true },
        }
    }
}

/// Everything derived from one patient.
#[derive(Debug, Clone)]
pub struct ProcessedPatient {
    pub patient_id: String,
    /// Filtered, annotated hour grid. Spans the admission window, all
    /// missing, when nothing survives filtering.
    pub grid: HourlyGrid,
    pub days: DayCounts,
    pub quality_before: QualityAccumulator,
    pub quality_after: QualityAccumulator,
    pub heatmap: Option<Svg>,
    pub bars: Option<Svg>,
    pub warnings: Vec<String>,
}

/// Filter, aggregate and render one patient. Consumes the raw record so
/// only one copy of the 1 Hz data is alive at a time.
pub fn process_patient(
    raw: PatientRecord,
    annotations: &[AnnotationRow],
    cfg: &Config,
    charts: ChartSelection,
) -> Result<ProcessedPatient> {
    let meta = raw.meta.clone();
    let tz = cfg.tz_offset_s(&meta.patient_id);
    let quality_before = QualityAccumulator::from_record(&raw);
    let hr_seconds = raw.signal(&SignalId::Hr).len();

    let filtered = apply_cascade(raw, &cfg.filter);
    let quality_after = QualityAccumulator::from_record(&filtered);
    let mut warnings = Vec::new();
    let mut grid = hourly_mean(&filtered, tz);
    drop(filtered);
    if grid.is_empty() {
        warnings.push("no data left after filtering; charts show the admission window as missing".to_string());
        grid = HourlyGrid::all_missing_over(meta.admission_start, meta.admission_end, tz);
    }
    let useful_hours = grid.useful_hours();
    warnings.extend(annotate_grid(&mut grid, &cfg.ranges));

    let (placed, placement_warnings) = place_annotations(annotations, &meta.patient_id, &grid);
    warnings.extend(placement_warnings);
    let mut render = |kind: ChartKind| -> Result<Svg> {
        let svg = match kind {
            ChartKind::Heatmap => render_heatmap(&meta.patient_id, &grid, &cfg.core_scales()?, &cfg.layout, &placed)?,
            ChartKind::Bars => render_barchart(&meta.patient_id, &grid, &cfg.layout, &placed)?,
        };
        warnings.extend(svg.warnings.iter().map(|w| format!("{}: {w}", kind.suffix())));
        Ok(svg)
    };
    let heatmap = charts.heatmap.then(|| render(ChartKind::Heatmap)).transpose()?;
    let bars = charts.bars.then(|| render(ChartKind::Bars)).transpose()?;

    Ok(ProcessedPatient {
        patient_id: meta.patient_id.clone(),
        days: DayCounts::from_parts(meta.admitted_days(), hr_seconds, useful_hours),
        grid,
        quality_before,
        quality_after,
        heatmap,
        bars,
        warnings,
    })
}

/// A directory of per-patient sample files.
#[derive(Debug, Clone)]
pub struct PatientDir {
    pub dir: PathBuf,
    pub patients: Vec<PatientMeta>,
    pub annotations: Vec<AnnotationRow>,
}

pub fn read_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

impl PatientDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let patients = parse_meta_csv(read_file(&dir.join(META_FILE))?)?;
        let annotations_path = dir.join(ANNOTATIONS_FILE);
        let annotations = if annotations_path.exists() {
            parse_annotations_csv(read_file(&annotations_path)?)?
        } else {
            Vec::new()
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            patients,
            annotations,
        })
    }

    /// Keep only the named patient.
    pub fn select(mut self, patient_id: Option<&str>) -> Result<Self> {
        if let Some(id) = patient_id {
            self.patients.retain(|m| m.patient_id == id);
            if self.patients.is_empty() {
                return Err(Error::Format(format!("patient {id} not listed in {META_FILE}")));
            }
        }
        Ok(self)
    }

    /// Parse one patient's samples. A missing sample file is an empty
    /// record (a patient without wearable data), reported as a diagnostic.
    pub fn load(&self, meta: &PatientMeta, cfg: &Config) -> Result<(PatientRecord, Vec<Diagnostic>)> {
        let path = self.dir.join(samples_file_name(&meta.patient_id));
        if !path.exists() {
            let diag = Diagnostic {
                line: None,
                message: format!("{}: no sample file, treating as zero-data patient", path.display()),
            };
            return Ok((PatientRecord::empty(meta.clone()), vec![diag]));
        }
        let parsed = parse_samples_csv(read_file(&path)?, cfg.sample_format)
            .map_err(|e| match e {
                Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
                other => other,
            })?;
        let built = build_record(meta.clone(), parsed.samples);
        let mut diagnostics = parsed.diagnostics;
        diagnostics.extend(built.diagnostics);
        Ok((built.record, diagnostics))
    }
}

/// Where a cohort run gets its patients.
#[derive(Debug, Clone)]
pub enum PatientSource {
    Directory(PatientDir),
    Synthetic(CohortSpec),
}

#[derive(Debug, Clone, Serialize)]
pub struct PatientReport {
    pub patient_id: String,
    pub days: DayCounts,
    pub warnings: Vec<String>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CohortRun {
    pub patients: Vec<PatientReport>,
    pub quality: QualitySummary,
    pub stats: Option<CohortStats>,
    pub ground_truth: Vec<GroundTruth>,
}

impl CohortRun {
    pub fn patient_days(&self) -> Vec<PatientDays> {
        self.patients
            .iter()
            .map(|p| PatientDays {
                patient_id: p.patient_id.clone(),
                days: p.days,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub charts: ChartSelection,
    /// Write `<id>_hourly.csv` per patient.
    pub hourly_csv: bool,
    /// Write cohort statistics, the quality report and both summary charts.
    pub cohort_outputs: bool,
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create_file(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Process every patient with a bounded worker pool. Each worker writes
/// only its own patient's files; results come back in patient order.
pub fn run_cohort(source: &PatientSource, cfg: &Config, out: &Path, opts: &RunOptions) -> Result<CohortRun> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    type Outcome = (PatientReport, QualityAccumulator, QualityAccumulator, Option<GroundTruth>);
    let handle = |raw: PatientRecord, diagnostics: Vec<Diagnostic>, annotations: &[AnnotationRow], truth: Option<GroundTruth>| -> Result<Outcome> {
        let id = raw.meta.patient_id.clone();
        let done = process_patient(raw, annotations, cfg, opts.charts)?;
        for (svg, kind) in [(&done.heatmap, ChartKind::Heatmap), (&done.bars, ChartKind::Bars)] {
            if let Some(svg) = svg {
                write_text(&out.join(format!("{id}_{}.svg", kind.suffix())), &svg.content)?;
            }
        }
        if opts.hourly_csv {
            write_with(&out.join(format!("{id}_hourly.csv")), |w| done.grid.write_csv(w))?;
        }
        for d in &diagnostics {
            log::warn!("{id}: {d}");
        }
        for w in &done.warnings {
            log::warn!("{id}: {w}");
        }
        let report = PatientReport {
            patient_id: id,
            days: done.days,
            warnings: done.warnings,
            diagnostics: diagnostics.iter().map(ToString::to_string).collect(),
        };
        Ok((report, done.quality_before, done.quality_after, truth))
    };

    let outcomes: Vec<Outcome> = pool.install(|| match source {
        PatientSource::Directory(dir) => dir
            .patients
            .par_iter()
            .map(|meta| {
                let (record, diags) = dir.load(meta, cfg)?;
                handle(record, diags, &dir.annotations, None)
            })
            .collect::<Result<Vec<_>>>(),
        PatientSource::Synthetic(spec) => {
            let profiles = cohort_profiles(spec)?;
            profiles
                .par_iter()
                .map(|profile| {
                    let GeneratedPatient { record, truth, annotations, .. } = generate_patient(profile)?;
                    handle(record, Vec::new(), &annotations, Some(truth))
                })
                .collect::<Result<Vec<_>>>()
        }
    })?;

    let mut before = QualityAccumulator::default();
    let mut after = QualityAccumulator::default();
    let mut patients = Vec::with_capacity(outcomes.len());
    let mut ground_truth = Vec::new();
    for (report, qb, qa, truth) in outcomes {
        before.merge(&qb);
        after.merge(&qa);
        patients.push(report);
        ground_truth.extend(truth);
    }
    let quality = QualitySummary::from_accumulators(&before, &after);
    let days: Vec<PatientDays> = patients
        .iter()
        .map(|p| PatientDays { patient_id: p.patient_id.clone(), days: p.days })
        .collect();
    let stats = if days.is_empty() { None } else { Some(cohort_stats(&days)?) };

    if opts.cohort_outputs {
        write_with(&out.join("quality_report.csv"), |w| quality.write_csv(w))?;
        write_text(&out.join("quality.svg"), &render_quality_chart(&quality, cfg.filter.quality_threshold).content)?;
        write_with(&out.join("cohort_days.csv"), |w| write_patient_days_csv(w, &days))?;
        write_text(&out.join("cohort_days.svg"), &render_cohort_days_chart(&days).content)?;
        if let Some(stats) = &stats {
            for w in &stats.warnings {
                log::warn!("cohort: {w}");
            }
            write_with(&out.join("cohort_stats.csv"), |w| stats.write_csv(w))?;
        }
        let report = serde_json::json!({
            "patients": &patients,
            "quality": &quality,
            "cohort": &stats,
        });
        write_text(&out.join(REPORT_FILE), &serde_json::to_string_pretty(&report)?)?;
        if !ground_truth.is_empty() {
            write_text(&out.join(GROUND_TRUTH_FILE), &serde_json::to_string_pretty(&ground_truth)?)?;
        }
    }
    Ok(CohortRun {
        patients,
        quality,
        stats,
        ground_truth,
    })
}

/// Write a synthetic cohort as a patient directory: metadata, one sample
/// file per patient, annotations and the generator's ground truth.
/// Patients are generated and written one at a time.
pub fn write_synthetic_dataset(spec: &CohortSpec, out: &Path) -> Result<Vec<GroundTruth>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let profiles = cohort_profiles(spec)?;
    let metas = profiles.iter().map(|p| p.meta()).collect::<Result<Vec<_>>>()?;
    write_with(&out.join(META_FILE), |w| crate::ingest::write_meta_csv(w, &metas))?;
    let mut truths = Vec::with_capacity(profiles.len());
    let mut annotations = Vec::new();
    for profile in &profiles {
        let g = generate_patient(profile)?;
        write_with(&out.join(samples_file_name(&profile.patient_id)), |w| g.record.write_csv(w))?;
        truths.push(g.truth);
        annotations.extend(g.annotations);
    }
    write_with(&out.join(ANNOTATIONS_FILE), |w| write_annotations_csv(w, &annotations))?;
    write_text(&out.join(GROUND_TRUTH_FILE), &serde_json::to_string_pretty(&truths)?)?;
    Ok(truths)
}
