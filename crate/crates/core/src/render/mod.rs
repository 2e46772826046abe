//! Deterministic SVG charts: five-band heat maps and baseline-relative
//! bar charts sharing one time axis.
//!
//! Every number is written with two decimals and elements are emitted in
//! a fixed order, so identical inputs give byte-identical documents.

mod bars;
mod colorbar;
mod heatmap;
pub mod ticks;

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::aggregate::{local_hour, HourlyGrid};
use crate::colorscale::Color;
use crate::error::{Error, Result};
use crate::signal::SignalId;

pub use bars::render_barchart;
pub use colorbar::{render_colorbar, Placement};
pub use heatmap::render_heatmap;
pub use ticks::{plan_ticks, tick_stride, DateMode, Tick, TickPlan, TickRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Heatmap,
    Bars,
}

impl ChartKind {
    /// File-name suffix: `<patient_id>_<suffix>.svg`.
    pub fn suffix(self) -> &'static str {
        match self {
            ChartKind::Heatmap => "heatmap",
            ChartKind::Bars => "bars",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarColors {
    pub up: Color,
    pub down: Color,
    pub moving_average: Color,
}

impl Default for BarColors {
    fn default() -> Self {
        Self {
            up: Color::rgb(0xF4, 0xA6, 0xA0),
            down: Color::rgb(0x6B, 0xAE, 0xD6),
            moving_average: Color::rgb(0xD7, 0x19, 0x1C),
        }
    }
}

/// Pixel geometry and chart furniture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartLayout {
    pub cell_width_px: f64,
    pub band_height_px: f64,
    pub band_gap_px: f64,
    pub margin_left_px: f64,
    pub margin_right_px: f64,
    pub margin_top_px: f64,
    pub margin_bottom_px: f64,
    pub colorbar_width_px: f64,
    pub background: Color,
    pub font_family: String,
    pub font_size_px: f64,
    pub show_colorbar: bool,
    pub date_mode: DateMode,
    pub midnight_color: Color,
    pub noon_color: Color,
    pub bar_colors: BarColors,
    pub moving_average_hours: usize,
    pub tick_rule: TickRule,
}

impl Default for ChartLayout {
    fn default() -> Self {
        Self {
            cell_width_px: 6.0,
            band_height_px: 40.0,
            band_gap_px: 6.0,
            margin_left_px: 60.0,
            margin_right_px: 20.0,
            margin_top_px: 30.0,
            margin_bottom_px: 44.0,
            colorbar_width_px: 12.0,
            background: Color::rgb(0xF0, 0xF0, 0xF0),
            font_family: "Helvetica, Arial, sans-serif".into(),
            font_size_px: 10.0,
            show_colorbar: true,
            date_mode: DateMode::Anonymized,
            midnight_color: Color::rgb(0, 0, 0),
            noon_color: Color::rgb(0x9E, 0x9E, 0x9E),
            bar_colors: BarColors::default(),
            moving_average_hours: 4,
            tick_rule: TickRule::default(),
        }
    }
}

impl ChartLayout {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("cell_width_px", self.cell_width_px),
            ("band_height_px", self.band_height_px),
            ("band_gap_px", self.band_gap_px),
            ("margin_left_px", self.margin_left_px),
            ("margin_right_px", self.margin_right_px),
            ("margin_top_px", self.margin_top_px),
            ("margin_bottom_px", self.margin_bottom_px),
            ("colorbar_width_px", self.colorbar_width_px),
            ("font_size_px", self.font_size_px),
        ];
        if let Some((name, v)) = dims.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("layout.{name} must be positive, got {v}")));
        }
        if self.moving_average_hours == 0 {
            return Err(Error::Config("layout.moving_average_hours must be at least 1".into()));
        }
        self.tick_rule.validate()
    }
}

/// A free-text event marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// Grid hour the marker sits at.
    pub hour: usize,
    pub text: String,
    #[serde(default)]
    pub emphasis: bool,
}

/// A timestamped annotation row, before it is placed on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRow {
    pub patient_id: String,
    pub timestamp: i64,
    pub text: String,
}

/// Parse `patient_id,timestamp,text`. Timestamps take the same forms as
/// in patient metadata.
pub fn parse_annotations_csv<R: Read>(source: R) -> Result<Vec<AnnotationRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Format(format!("annotations: {e}")))?;
        if row.len() < 3 {
            return Err(Error::Format(format!(
                "annotations: expected `patient_id,timestamp,text`, got {:?}",
                row.as_slice()
            )));
        }
        rows.push(AnnotationRow {
            patient_id: row[0].to_string(),
            timestamp: crate::ingest::parse_timestamp(&row[1])?,
            text: row[2].to_string(),
        });
    }
    Ok(rows)
}

pub fn write_annotations_csv<W: std::io::Write>(mut out: W, rows: &[AnnotationRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["patient_id", "timestamp", "text"])?;
    for r in rows {
        w.write_record([r.patient_id.as_str(), &r.timestamp.to_string(), r.text.as_str()])?;
    }
    w.flush()
}

/// Place one patient's annotations on a grid. Rows outside the grid are
/// dropped with a warning.
pub fn place_annotations(
    rows: &[AnnotationRow],
    patient_id: &str,
    grid: &HourlyGrid,
) -> (Vec<Annotation>, Vec<String>) {
    let mut placed = Vec::new();
    let mut warnings = Vec::new();
    for r in rows.iter().filter(|r| r.patient_id == patient_id) {
        match grid.hour_index(r.timestamp) {
            Some(hour) => placed.push(Annotation {
                hour,
                text: r.text.clone(),
                emphasis: false,
            }),
            None => warnings.push(format!(
                "annotation `{}` at {} lies outside the chart, skipped",
                r.text, r.timestamp
            )),
        }
    }
    (placed, warnings)
}

/// A rendered document plus whatever was worth warning about.
#[derive(Debug, Clone, PartialEq)]
pub struct Svg {
    pub content: String,
    pub warnings: Vec<String>,
}

pub(crate) fn f2(v: f64) -> String {
    // Avoid "-0.00".
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Short numeric label: at most two decimals, trailing zeros trimmed.
pub(crate) fn short_number(v: f64) -> String {
    let s = f2(v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\t' && c != '\n' => {}
            c => out.push(c),
        }
    }
    out
}

/// Geometry shared by both band charts.
pub(crate) struct Frame<'a> {
    pub layout: &'a ChartLayout,
    pub hours: usize,
    pub first_local_hour: i64,
    pub annotation_rows: usize,
    pub bands: usize,
}

const ANNOTATION_ROW_PX: f64 = 14.0;
const COLORBAR_AREA_PX: f64 = 64.0;

impl Frame<'_> {
    pub fn plot_left(&self) -> f64 {
        self.layout.margin_left_px
    }

    pub fn plot_width(&self) -> f64 {
        self.hours as f64 * self.layout.cell_width_px
    }

    pub fn plot_top(&self) -> f64 {
        self.layout.margin_top_px + self.annotation_rows as f64 * ANNOTATION_ROW_PX
    }

    pub fn band_top(&self, band: usize) -> f64 {
        self.plot_top() + band as f64 * (self.layout.band_height_px + self.layout.band_gap_px)
    }

    pub fn plot_bottom(&self) -> f64 {
        self.band_top(self.bands) - self.layout.band_gap_px
    }

    pub fn x(&self, hour: f64) -> f64 {
        self.plot_left() + hour * self.layout.cell_width_px
    }

    pub fn colorbar_left(&self) -> f64 {
        self.plot_left() + self.plot_width() + 10.0
    }

    pub fn width(&self) -> f64 {
        let colorbar = if self.layout.show_colorbar { COLORBAR_AREA_PX } else { 0.0 };
        self.plot_left() + self.plot_width() + colorbar + self.layout.margin_right_px
    }

    pub fn height(&self) -> f64 {
        self.plot_bottom() + self.layout.margin_bottom_px
    }

    pub fn open(&self, out: &mut String, title: &str, class: &str) {
        let (w, h) = (f2(self.width()), f2(self.height()));
        let l = self.layout;
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" class="{class}" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{}" font-size="{}">"#,
            escape(&l.font_family),
            f2(l.font_size_px)
        );
        let _ = writeln!(
            out,
            r#"<rect class="background" x="0.00" y="0.00" width="{w}" height="{h}" fill="{}"/>"#,
            l.background
        );
        let _ = writeln!(
            out,
            r#"<text class="title" x="{}" y="{}" font-weight="bold">{}</text>"#,
            f2(self.plot_left()),
            f2(l.font_size_px + 6.0),
            escape(title)
        );
    }

    pub fn band_label(&self, out: &mut String, band: usize, signal: &SignalId) {
        let y = self.band_top(band) + self.layout.band_height_px / 2.0;
        let _ = writeln!(
            out,
            r#"<text class="band-label" x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            f2(self.plot_left() - 6.0),
            f2(y),
            escape(signal.label())
        );
    }

    /// Dashed midnight (black) and noon (grey) lines through the band area.
    pub fn day_lines(&self, out: &mut String) {
        let (top, bottom) = (f2(self.plot_top()), f2(self.plot_bottom()));
        out.push_str("<g class=\"day-lines\">\n");
        for k in 0..self.hours {
            let hod = (self.first_local_hour + k as i64).rem_euclid(24);
            let (class, color) = match hod {
                0 => ("midnight", self.layout.midnight_color),
                12 => ("noon", self.layout.noon_color),
                _ => continue,
            };
            let x = f2(self.x(k as f64));
            let _ = writeln!(
                out,
                r#"<line class="{class}" x1="{x}" y1="{top}" x2="{x}" y2="{bottom}" stroke="{color}" stroke-width="1.00" stroke-dasharray="4,3"/>"#
            );
        }
        out.push_str("</g>\n");
    }

    pub fn axis(&self, out: &mut String) {
        let plan = plan_ticks(
            self.first_local_hour,
            self.hours,
            self.layout.date_mode,
            &self.layout.tick_rule,
        );
        let base = self.plot_bottom();
        let fs = self.layout.font_size_px;
        let _ = writeln!(out, r#"<g class="axis" data-stride="{}">"#, plan.stride);
        let _ = writeln!(
            out,
            r##"<line class="axis-line" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000" stroke-width="1.00"/>"##,
            f2(self.plot_left()),
            f2(base),
            f2(self.plot_left() + self.plot_width()),
            f2(base)
        );
        for t in &plan.minor {
            let x = f2(self.x(t.hour as f64));
            let _ = writeln!(
                out,
                r##"<line class="minor-tick" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#000000" stroke-width="0.50"/>"##,
                f2(base),
                f2(base + 3.0)
            );
            let _ = writeln!(
                out,
                r#"<text class="minor-label" x="{x}" y="{}" text-anchor="middle" font-size="{}">{}</text>"#,
                f2(base + 4.0 + fs * 0.8),
                f2(fs * 0.8),
                t.label
            );
        }
        for (i, t) in plan.major.iter().enumerate() {
            let x = f2(self.x(t.hour as f64));
            let _ = writeln!(
                out,
                r##"<line class="major-tick" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#000000" stroke-width="1.00"/>"##,
                f2(base),
                f2(base + 6.0 + fs * 0.8)
            );
            // A partial first day can leave no room for its label.
            let room = plan.major.get(i + 1).map_or(f64::INFINITY, |n| self.x(n.hour as f64) - self.x(t.hour as f64));
            if room < t.label.len() as f64 * fs * 0.7 + 4.0 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<text class="major-label" x="{}" y="{}" font-weight="bold">{}</text>"#,
                f2(self.x(t.hour as f64) + 2.0),
                f2(base + 8.0 + fs * 1.8),
                escape(&t.label)
            );
        }
        out.push_str("</g>\n");
    }

    /// Texts above the top band with a thin rule down through all bands.
    pub fn annotations(&self, out: &mut String, annotations: &[Annotation]) {
        if annotations.is_empty() {
            return;
        }
        out.push_str("<g class=\"annotations\">\n");
        for (i, a) in annotations.iter().enumerate() {
            let row = i % self.annotation_rows.max(1);
            let x = self.x(a.hour as f64 + 0.5);
            let y = self.layout.margin_top_px + (row as f64 + 1.0) * ANNOTATION_ROW_PX - 3.0;
            let weight = if a.emphasis { " font-weight=\"bold\"" } else { "" };
            let _ = writeln!(
                out,
                r##"<line class="annotation-rule" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#757575" stroke-width="0.75"/>"##,
                f2(y + 2.0),
                f2(self.plot_bottom()),
                x = f2(x)
            );
            let _ = writeln!(
                out,
                r#"<text class="annotation" data-hour="{}" x="{}" y="{}"{weight}>{}</text>"#,
                a.hour,
                f2(x + 2.0),
                f2(y),
                escape(&a.text)
            );
        }
        out.push_str("</g>\n");
    }
}

pub(crate) fn annotation_rows(annotations: &[Annotation]) -> usize {
    annotations.len().min(2)
}

/// Check that every core band lives on the grid's hour axis.
pub(crate) fn check_grid(grid: &HourlyGrid) -> Result<()> {
    for s in grid.series.values() {
        if s.values.len() != grid.hours || s.counts.len() != grid.hours {
            return Err(Error::Precondition(format!(
                "{}: {} hourly values on a {}-hour grid",
                s.signal,
                s.values.len(),
                grid.hours
            )));
        }
        let first = local_hour(s.start_hour, grid.tz_offset_s);
        if grid.hours > 0 && first != grid.first_local_hour {
            return Err(Error::Precondition(format!(
                "{}: series starts at a different hour than the grid",
                s.signal
            )));
        }
    }
    Ok(())
}
