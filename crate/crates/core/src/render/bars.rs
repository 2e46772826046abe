use std::fmt::Write as _;

use super::{annotation_rows, check_grid, f2, short_number, Annotation, ChartLayout, Frame, Svg};
use crate::aggregate::{moving_average, HourlyGrid};
use crate::error::Result;
use crate::signal::SignalId;

const BAR_PAD_PX: f64 = 2.0;

/// Render the five core bands as bars growing up or down from the
/// per-patient baseline, with the trailing moving average as a red line.
///
/// Both directions share one pixels-per-unit factor: the larger of the
/// two baseline deviations fills half a band.
pub fn render_barchart(
    title: &str,
    grid: &HourlyGrid,
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
    let colors = &layout.bar_colors;
    let mut out = String::with_capacity(256 + grid.hours * SignalId::CORE.len() * 120);
    frame.open(&mut out, &format!("{title} bar chart"), "barchart");

    for (band, signal) in SignalId::CORE.iter().enumerate() {
        frame.band_label(&mut out, band, signal);
        let top = frame.band_top(band);
        let center = top + layout.band_height_px / 2.0;
        let half = (layout.band_height_px / 2.0 - BAR_PAD_PX).max(0.0);
        let series = grid.get(signal);
        let _ = writeln!(out, r#"<g class="band" data-signal="{signal}">"#);

        let Some((series, range)) = series.and_then(|s| s.range.map(|r| (s, r))) else {
            warnings.push(format!("{signal}: undefined baseline, band left empty"));
            let _ = writeln!(
                out,
                r##"<text class="warning" x="{}" y="{}" dominant-baseline="middle" fill="#757575">&#9888; no data</text>"##,
                f2(frame.plot_left() + 4.0),
                f2(center)
            );
            out.push_str("</g>\n");
            continue;
        };
        if range.is_degenerate() {
            warnings.push(format!("{signal}: degenerate range (vmin = vmax), all bars flat"));
        }

        let baseline = range.baseline;
        let spread = (range.vmin - baseline).abs().max((range.vmax - baseline).abs());
        let px_per_unit = if spread > 0.0 { half / spread } else { 0.0 };
        let offset_px = |v: f64| ((v - baseline) * px_per_unit).clamp(-half, half);

        let _ = writeln!(
            out,
            r##"<line class="baseline" x1="{}" y1="{c}" x2="{}" y2="{c}" stroke="#9E9E9E" stroke-width="0.50"/>"##,
            f2(frame.plot_left()),
            f2(frame.plot_left() + frame.plot_width()),
            c = f2(center)
        );
        let w = f2(layout.cell_width_px * 0.8);
        for (hour, value) in series.values.iter().enumerate() {
            let Some(v) = *value else { continue };
            let dy = offset_px(v);
            let (class, y, fill) = if v > baseline {
                ("bar up", center - dy.abs(), colors.up)
            } else if v < baseline {
                ("bar down", center, colors.down)
            } else {
                ("bar zero", center, colors.up)
            };
            let _ = writeln!(
                out,
                r#"<rect class="{class}" data-hour="{hour}" x="{}" y="{}" width="{w}" height="{}" fill="{fill}"/>"#,
                f2(frame.x(hour as f64 + 0.1)),
                f2(y),
                f2(dy.abs())
            );
        }

        let ma = moving_average(&series.values, layout.moving_average_hours)?;
        let mut d = String::new();
        let mut pen_down = false;
        for (hour, m) in ma.iter().enumerate() {
            match m {
                Some(m) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(d, "{cmd}{},{} ", f2(frame.x(hour as f64 + 0.5)), f2(center - offset_px(*m)));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                out,
                r#"<path class="moving-average" d="{}" fill="none" stroke="{}" stroke-width="1.50"/>"#,
                d.trim_end(),
                colors.moving_average
            );
        }
        out.push_str("</g>\n");

        if layout.show_colorbar {
            let _ = writeln!(
                out,
                r#"<text class="baseline-label" x="{}" y="{}" dominant-baseline="middle">{} {}</text>"#,
                f2(frame.colorbar_left()),
                f2(center),
                short_number(baseline),
                super::escape(signal.unit())
            );
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
