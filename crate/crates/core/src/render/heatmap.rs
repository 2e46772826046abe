use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::colorbar::{render_colorbar, Placement};
use super::{annotation_rows, check_grid, f2, Annotation, ChartLayout, Frame, Svg};
use crate::aggregate::HourlyGrid;
use crate::colorscale::{normalize, ColorScale, ScaleConfig};
use crate::colorscale::Palette;
use crate::error::Result;
use crate::signal::SignalId;

/// Render the five core bands as one colored cell per hour.
///
/// `grid` should already carry per-signal ranges
/// ([`crate::aggregate::annotate_grid`]); a band without one is drawn
/// entirely in the missing color. Signals absent from `scales` use their
/// default scale.
pub fn render_heatmap(
    title: &str,
    grid: &HourlyGrid,
    scales: &BTreeMap<SignalId, ColorScale>,
    layout: &ChartLayout,
    annotations: &[Annotation],
) -> Result<Svg> {
    check_grid(grid)?;
    let mut warnings = Vec::new();
    let frame = Frame {
        layout,
        hours: grid.hours,
        first_local_hour: grid.first_local_hour,
        annotation_rows: annotation_rows(annotations),
        bands: SignalId::CORE.len(),
    };
    let mut out = String::with_capacity(256 + grid.hours * SignalId::CORE.len() * 110);
    frame.open(&mut out, &format!("{title} heat map"), "heatmap");

    for (band, signal) in SignalId::CORE.iter().enumerate() {
        let fallback;
        let scale = match scales.get(signal) {
            Some(s) => s,
            None => {
                fallback = ScaleConfig::default_for(signal).build(&Palette::default())?;
                &fallback
            }
        };
        let series = grid.get(signal);
        let range = series.and_then(|s| s.range);
        let degenerate = range.is_some_and(|r| r.is_degenerate());
        match (series, range) {
            (None, _) | (Some(_), None) => {
                warnings.push(format!("{signal}: no values to color, band rendered as missing"))
            }
            (Some(_), Some(_)) if degenerate => {
                warnings.push(format!("{signal}: degenerate range (vmin = vmax), band drawn at center color"))
            }
            _ => {}
        }

        frame.band_label(&mut out, band, signal);
        let _ = writeln!(out, r#"<g class="band" data-signal="{signal}">"#);
        let top = f2(frame.band_top(band));
        let (w, h) = (f2(layout.cell_width_px), f2(layout.band_height_px));
        for hour in 0..grid.hours {
            let value = series.and_then(|s| s.values[hour]);
            let position = match (value, range) {
                (Some(_), Some(_)) if degenerate => Some(0.5),
                (Some(v), Some(r)) => Some(normalize(v, r.vmin, r.vmax, r.baseline, scale.kind)?),
                _ => None,
            };
            let fill = scale.map_color(position);
            let _ = writeln!(
                out,
                r#"<rect class="cell" data-hour="{hour}" x="{}" y="{top}" width="{w}" height="{h}" fill="{fill}"/>"#,
                f2(frame.x(hour as f64))
            );
        }
        out.push_str("</g>\n");

        if layout.show_colorbar {
            let placement = Placement {
                x: frame.colorbar_left(),
                y: frame.band_top(band),
                width: layout.colorbar_width_px,
                height: layout.band_height_px,
                id: format!("cb-{signal}"),
                font_size: layout.font_size_px * 0.8,
            };
            if let Some(r) = range {
                out.push_str(&render_colorbar(scale, r.vmin, r.vmax, r.baseline, &placement));
            }
        }
    }

    frame.day_lines(&mut out);
    frame.axis(&mut out);
    frame.annotations(&mut out, annotations);
    out.push_str("</svg>\n");
    Ok(Svg {
        content: out,
        warnings,
    })
}
