//! Cohort-level day accounting and the two summary charts: quality before
//! and after filtering, and admitted vs. recorded vs. useful days.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::aggregate::DayCounts;
use crate::colorscale::Color;
use crate::error::{Error, Result};
use crate::quality::QualitySummary;
use crate::render::{escape, f2, short_number, Svg};
use crate::signal::SignalId;

/// Upper edges of the duration bins `[0,2) [2,5) [5,10) [10,inf)`, days.
pub const DURATION_BIN_EDGES: [f64; 3] = [2.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientDays {
    pub patient_id: String,
    pub days: DayCounts,
}

impl PatientDays {
    pub fn is_zero_data(&self) -> bool {
        self.days.recorded_days == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 for a single patient.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortStats {
    pub patients: usize,
    pub admitted: Stats,
    pub recorded: Stats,
    pub useful: Stats,
    /// Patients per recorded-days bin.
    pub duration_bins: [usize; 4],
    pub zero_data_patients: usize,
    pub warnings: Vec<String>,
}

pub fn duration_bin(days: f64) -> usize {
    DURATION_BIN_EDGES
        .iter()
        .position(|&edge| days < edge)
        .unwrap_or(DURATION_BIN_EDGES.len())
}

pub fn cohort_stats(patients: &[PatientDays]) -> Result<CohortStats> {
    if patients.is_empty() {
        return Err(Error::Precondition("cohort statistics need at least one patient".into()));
    }
    let pick = |f: fn(&DayCounts) -> f64| patients.iter().map(|p| f(&p.days)).collect::<Vec<_>>();
    let recorded = pick(|d| d.recorded_days);
    let mut duration_bins = [0usize; 4];
    for &r in &recorded {
        duration_bins[duration_bin(r)] += 1;
    }
    let mut warnings = Vec::new();
    if patients.len() == 1 {
        warnings.push("single patient: standard deviations reported as 0".to_string());
    }
    Ok(CohortStats {
        patients: patients.len(),
        admitted: Stats::of(&pick(|d| d.admitted_days)),
        recorded: Stats::of(&recorded),
        useful: Stats::of(&pick(|d| d.useful_days)),
        duration_bins,
        zero_data_patients: patients.iter().filter(|p| p.is_zero_data()).count(),
        warnings,
    })
}

impl CohortStats {
    /// Key/value CSV: `statistic,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "statistic,value")?;
        writeln!(out, "patients,{}", self.patients)?;
        for (name, s) in [
            ("admitted_days", &self.admitted),
            ("recorded_days", &self.recorded),
            ("useful_days", &self.useful),
        ] {
            writeln!(out, "{name}_mean,{:.6}", s.mean)?;
            writeln!(out, "{name}_std,{:.6}", s.std)?;
            writeln!(out, "{name}_min,{:.6}", s.min)?;
            writeln!(out, "{name}_max,{:.6}", s.max)?;
        }
        let labels = ["recorded_days_lt_2", "recorded_days_2_to_5", "recorded_days_5_to_10", "recorded_days_ge_10"];
        for (label, count) in labels.iter().zip(self.duration_bins) {
            writeln!(out, "{label},{count}")?;
        }
        writeln!(out, "zero_data_patients,{}", self.zero_data_patients)
    }
}

/// `patient_id,admitted_days,recorded_days,useful_days`, sorted by id.
pub fn write_patient_days_csv<W: Write>(mut out: W, patients: &[PatientDays]) -> std::io::Result<()> {
    writeln!(out, "patient_id,admitted_days,recorded_days,useful_days")?;
    for p in sorted(patients) {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6}",
            p.patient_id, p.days.admitted_days, p.days.recorded_days, p.days.useful_days
        )?;
    }
    Ok(())
}

fn sorted(patients: &[PatientDays]) -> Vec<&PatientDays> {
    let mut v: Vec<_> = patients.iter().collect();
    v.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    v
}

const ADMITTED: Color = Color::rgb(0xD9, 0xD9, 0xD9);
const RECORDED: Color = Color::rgb(0x73, 0x73, 0x73);
const USEFUL: Color = Color::rgb(0x21, 0x71, 0xB5);
const FONT: &str = "Helvetica, Arial, sans-serif";

/// One group per patient (sorted by id) with three overlaid bars:
/// admitted (light grey), recorded (dark grey) and useful (blue) days.
/// Zero-length bars are omitted.
pub fn render_cohort_days_chart(patients: &[PatientDays]) -> Svg {
    let patients = sorted(patients);
    let (left, top, plot_h, group_w) = (50.0, 40.0, 240.0, 14.0);
    let plot_w = (patients.len() as f64 * group_w).max(group_w);
    let (width, height) = ((left + plot_w + 20.0).max(360.0), top + plot_h + 70.0);
    let max_days = patients
        .iter()
        .map(|p| p.days.admitted_days.max(p.days.recorded_days).max(p.days.useful_days))
        .fold(0.0, f64::max);
    let axis_max = nice_ceiling(max_days.max(1.0));
    let y = |days: f64| top + plot_h - days / axis_max * plot_h;

    let mut out = String::new();
    open(&mut out, width, height, "cohort-days", "Admitted, recorded and useful days per patient");
    y_axis(&mut out, left, left + plot_w, axis_max, &y, "days");
    for (i, p) in patients.iter().enumerate() {
        let x0 = left + i as f64 * group_w;
        let _ = writeln!(out, r#"<g class="patient" data-patient="{}">"#, escape(&p.patient_id));
        for (class, days, inset, color) in [
            ("admitted", p.days.admitted_days, 1.0, ADMITTED),
            ("recorded", p.days.recorded_days, 3.0, RECORDED),
            ("useful", p.days.useful_days, 5.0, USEFUL),
        ] {
            if days <= 0.0 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<rect class="{class}" data-days="{}" x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
                f2(days),
                f2(x0 + inset),
                f2(y(days)),
                f2(group_w - 2.0 * inset),
                f2(top + plot_h - y(days))
            );
        }
        let _ = writeln!(
            out,
            r#"<text class="patient-label" x="{x}" y="{ly}" font-size="7.00" text-anchor="end" transform="rotate(-90 {x} {ly})">{}</text>"#,
            escape(&p.patient_id),
            x = f2(x0 + group_w / 2.0 + 2.5),
            ly = f2(top + plot_h + 4.0)
        );
        out.push_str("</g>\n");
    }
    legend(
        &mut out,
        left,
        height - 12.0,
        &[("admitted", ADMITTED), ("recorded", RECORDED), ("useful", USEFUL)],
    );
    out.push_str("</svg>\n");
    Svg {
        content: out,
        warnings: Vec::new(),
    }
}

/// Two panels of mean quality per core signal, before (left) and after
/// (right) filtering, on a 0 to 100 % axis with the threshold gridline.
pub fn render_quality_chart(summary: &QualitySummary, threshold: u8) -> Svg {
    let (left, top, panel_w, plot_h, gap) = (50.0, 40.0, 200.0, 200.0, 40.0);
    let (width, height) = (left + 2.0 * panel_w + gap + 20.0, top + plot_h + 40.0);
    let y = |q: f64| top + plot_h - q / 100.0 * plot_h;
    let mut out = String::new();
    let mut warnings = Vec::new();
    open(&mut out, width, height, "quality", "Mean signal quality before and after filtering");

    let core: Vec<_> = SignalId::CORE
        .iter()
        .map(|id| summary.get(id).cloned())
        .collect();
    let slot = panel_w / core.len() as f64;
    for (panel, name) in [(0usize, "before"), (1, "after")] {
        let x0 = left + panel as f64 * (panel_w + gap);
        let _ = writeln!(out, r#"<g class="panel" data-panel="{name}">"#);
        y_axis(&mut out, x0, x0 + panel_w, 100.0, &y, "%");
        let ty = f2(y(f64::from(threshold)));
        let _ = writeln!(
            out,
            r##"<line class="threshold-line" x1="{}" y1="{ty}" x2="{}" y2="{ty}" stroke="#CA0020" stroke-width="0.75" stroke-dasharray="3,2"/>"##,
            f2(x0),
            f2(x0 + panel_w)
        );
        for (i, (signal, row)) in SignalId::CORE.iter().zip(&core).enumerate() {
            let xs = x0 + i as f64 * slot;
            let mean = row.as_ref().and_then(|r| if panel == 0 { r.mean_before } else { r.mean_after });
            match mean {
                Some(q) => {
                    let _ = writeln!(
                        out,
                        r#"<rect class="quality-bar" data-signal="{signal}" data-quality="{}" x="{}" y="{}" width="{}" height="{}" fill="{USEFUL}"/>"#,
                        f2(q),
                        f2(xs + slot * 0.2),
                        f2(y(q)),
                        f2(slot * 0.6),
                        f2(top + plot_h - y(q))
                    );
                }
                None => {
                    if panel == 0 {
                        warnings.push(format!("{signal}: no quality channel, bar omitted"));
                    }
                    let _ = writeln!(
                        out,
                        r##"<text class="na" data-signal="{signal}" x="{}" y="{}" text-anchor="middle" fill="#757575">n/a</text>"##,
                        f2(xs + slot / 2.0),
                        f2(top + plot_h - 6.0)
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"<text class="signal-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
                f2(xs + slot / 2.0),
                f2(top + plot_h + 14.0),
                escape(signal.label())
            );
        }
        let _ = writeln!(
            out,
            r#"<text class="panel-title" x="{}" y="{}" text-anchor="middle">{name} filtering</text>"#,
            f2(x0 + panel_w / 2.0),
            f2(top - 8.0)
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Svg {
        content: out,
        warnings,
    }
}

fn open(out: &mut String, width: f64, height: f64, class: &str, title: &str) {
    let (w, h) = (f2(width), f2(height));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" class="{class}" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{FONT}" font-size="10.00">"#
    );
    let _ = writeln!(
        out,
        r##"<rect class="background" x="0.00" y="0.00" width="{w}" height="{h}" fill="#FFFFFF"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text class="title" x="10.00" y="18.00" font-weight="bold">{}</text>"#,
        escape(title)
    );
}

fn y_axis(out: &mut String, x0: f64, x1: f64, max: f64, y: &dyn Fn(f64) -> f64, unit: &str) {
    let step = max / 5.0;
    for i in 0..=5 {
        let v = step * f64::from(i);
        let yy = f2(y(v));
        let _ = writeln!(
            out,
            r##"<line class="grid" x1="{}" y1="{yy}" x2="{}" y2="{yy}" stroke="#E0E0E0" stroke-width="0.50"/>"##,
            f2(x0),
            f2(x1)
        );
        let _ = writeln!(
            out,
            r#"<text class="y-label" x="{}" y="{yy}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            f2(x0 - 4.0),
            short_number(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text class="y-unit" x="{}" y="{}" text-anchor="end">{unit}</text>"#,
        f2(x0 - 4.0),
        f2(y(max) - 12.0)
    );
}

fn legend(out: &mut String, x: f64, y: f64, items: &[(&str, Color)]) {
    for (i, (label, color)) in items.iter().enumerate() {
        let xi = x + i as f64 * 90.0;
        let _ = writeln!(
            out,
            r#"<rect class="legend-swatch" x="{}" y="{}" width="10.00" height="10.00" fill="{color}"/>"#,
            f2(xi),
            f2(y - 9.0)
        );
        let _ = writeln!(out, r#"<text class="legend" x="{}" y="{}">{label} days</text>"#, f2(xi + 14.0), f2(y));
    }
}

fn nice_ceiling(v: f64) -> f64 {
    let magnitude = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|c| *c >= v)
        .unwrap_or(10.0 * magnitude)
}
