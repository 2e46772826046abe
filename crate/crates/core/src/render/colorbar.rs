use std::fmt::Write as _;

use super::{escape, f2, short_number};
use crate::colorscale::{normalize, ColorScale, ScaleMode};

/// Where a color bar goes in the host document.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    /// Unique within the document; used for the gradient id.
    pub id: String,
    pub font_size: f64,
}

/// Vertical legend strip, low values at the bottom, labelled at `vmin`,
/// the baseline and `vmax`.
///
/// Continuous scales become a linear gradient with a stop at every
/// anchor, discrete scales one solid segment per bin. A degenerate range
/// is a single block in the center color with one label.
pub fn render_colorbar(scale: &ColorScale, vmin: f64, vmax: f64, baseline: f64, at: &Placement) -> String {
    let mut out = String::new();
    let id = escape(&at.id);
    let _ = writeln!(out, r#"<g class="colorbar" id="{id}">"#);
    let (x, w) = (f2(at.x), f2(at.width));
    let bottom = at.y + at.height;
    let y_at = |p: f64| bottom - p * at.height;

    if vmin >= vmax {
        let _ = writeln!(
            out,
            r#"<rect class="colorbar-block" x="{x}" y="{}" width="{w}" height="{}" fill="{}"/>"#,
            f2(at.y),
            f2(at.height),
            scale.map_color(Some(0.5))
        );
        label(&mut out, at, y_at(0.5), vmin);
        out.push_str("</g>\n");
        return out;
    }

    match scale.mode {
        ScaleMode::Continuous => {
            let mut offsets: Vec<f64> = scale
                .anchors
                .iter()
                .map(|(p, _)| if scale.inverted { 1.0 - p } else { *p })
                .collect();
            offsets.sort_by(f64::total_cmp);
            let _ = writeln!(out, r#"<defs><linearGradient id="{id}-grad" x1="0" y1="1" x2="0" y2="0">"#);
            for p in offsets {
                let _ = writeln!(
                    out,
                    r#"<stop offset="{}" stop-color="{}"/>"#,
                    f2(p),
                    scale.map_color(Some(p))
                );
            }
            out.push_str("</linearGradient></defs>\n");
            let _ = writeln!(
                out,
                r##"<rect class="colorbar-strip" x="{x}" y="{}" width="{w}" height="{}" fill="url(#{id}-grad)"/>"##,
                f2(at.y),
                f2(at.height)
            );
        }
        ScaleMode::Discrete(n) => {
            let seg = at.height / f64::from(n);
            for i in 0..n {
                let mid = (f64::from(i) + 0.5) / f64::from(n);
                let _ = writeln!(
                    out,
                    r#"<rect class="colorbar-step" x="{x}" y="{}" width="{w}" height="{}" fill="{}"/>"#,
                    f2(bottom - f64::from(i + 1) * seg),
                    f2(seg),
                    scale.map_color(Some(mid))
                );
            }
        }
    }

    // End labels stay inside the bar so neighbouring bands never collide;
    // the baseline label is dropped when it would overlap one of them.
    let half = at.font_size / 2.0;
    let (lo_y, hi_y) = (y_at(0.0) - half, y_at(1.0) + half);
    let base_y = y_at(normalize(baseline, vmin, vmax, baseline, scale.kind).unwrap_or(0.5));
    label(&mut out, at, lo_y, vmin);
    if base_y - hi_y >= at.font_size && lo_y - base_y >= at.font_size {
        label(&mut out, at, base_y, baseline);
    }
    label(&mut out, at, hi_y, vmax);
    out.push_str("</g>\n");
    out
}

fn label(out: &mut String, at: &Placement, y: f64, value: f64) {
    let _ = writeln!(
        out,
        r#"<text class="colorbar-label" x="{}" y="{}" dominant-baseline="middle" font-size="{}">{}</text>"#,
        f2(at.x + at.width + 3.0),
        f2(y),
        f2(at.font_size),
        short_number(value)
    );
}
