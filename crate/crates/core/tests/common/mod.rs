//! Helpers shared by the integration tests: brute-force reference
//! implementations, random record builders and SVG inspection.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use vitalband::colorscale::{Color, ColorScale};
use vitalband::ingest::{build_record, PatientMeta, PatientRecord};
use vitalband::synth::Rng;
use vitalband::{SignalId, VitalSample};

pub const T0: i64 = 1_583_020_800;

// ---------------------------------------------------------------- oracles

/// Hourly means keyed by local hour index, straight from a sample list.
/// Uses floating-point floor division so it shares no code with the
/// library's integer bucketing.
pub fn oracle_hourly(samples: &[(i64, f64)], tz_offset_s: i64) -> BTreeMap<i64, f64> {
    let mut acc: HashMap<i64, (f64, u64)> = HashMap::new();
    for &(t, v) in samples {
        let hour = ((t + tz_offset_s) as f64 / 3600.0).floor() as i64;
        let e = acc.entry(hour).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(h, (s, n))| (h, s / n as f64)).collect()
}

/// (vmin, baseline, vmax) over present hourly values.
pub fn oracle_range(values: &[Option<f64>]) -> Option<(f64, f64, f64)> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let mut sorted = present.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    Some((sorted[0], mean, sorted[sorted.len() - 1]))
}

/// Trailing window ending at (and including) each hour; the mean of the
/// present values in it, or None when it holds none.
pub fn oracle_moving_average(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let w: Vec<f64> = values[lo..=i].iter().flatten().copied().collect();
            (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64)
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------- random records

pub fn meta(id: &str, start: i64, end: i64) -> PatientMeta {
    PatientMeta::new(id, start, end).unwrap()
}

/// A record with samples scattered around (and partly outside) its
/// admission window: random qualities, seconds without HR, quality-less
/// TEMP and an occasional extra signal.
pub fn random_record(rng: &mut Rng, id: &str, max_seconds: u64) -> PatientRecord {
    let span = rng.range_u64(10, max_seconds.max(11)) as i64;
    let start = T0 + rng.range_u64(0, 86_400) as i64;
    let admission_start = start + rng.range_u64(0, (span / 4) as u64 + 1) as i64;
    let admission_end = admission_start + 1 + rng.range_u64(0, (span / 2) as u64 + 1) as i64;
    let hr_presence = rng.range_f64(0.3, 1.0);
    let mut samples = Vec::new();
    let signals = [SignalId::Hr, SignalId::Hrv, SignalId::Rr, SignalId::Spo2, SignalId::Temp, SignalId::Other("BP".into())];
    for t in start..start + span {
        for sig in &signals {
            let p = match sig {
                SignalId::Hr => hr_presence,
                SignalId::Other(_) => 0.1,
                _ => 0.7,
            };
            if !rng.chance(p) {
                continue;
            }
            let quality = match sig {
                SignalId::Temp => None,
                _ => Some(rng.range_u64(0, 100) as u8),
            };
            samples.push(VitalSample {
                timestamp: t,
                signal: sig.clone(),
                value: rng.range_f64(10.0, 120.0),
                quality,
            });
        }
    }
    build_record(meta(id, admission_start, admission_end), samples).record
}

/// One signal, `n` samples with random gaps, starting at a random offset.
pub fn random_series(rng: &mut Rng, n: usize) -> Vec<(i64, f64)> {
    let mut t = T0 + rng.range_u64(0, 7200) as i64;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if rng.chance(0.001) {
            t += rng.range_u64(1, 20_000) as i64;
        }
        out.push((t, rng.range_f64(-50.0, 250.0)));
        t += 1;
    }
    out
}

pub fn record_from(signal: SignalId, series: &[(i64, f64)]) -> PatientRecord {
    let samples = series.iter().map(|&(t, v)| VitalSample {
        timestamp: t,
        signal: signal.clone(),
        value: v,
        quality: None,
    });
    let lo = series.iter().map(|s| s.0).min().unwrap_or(0);
    let hi = series.iter().map(|s| s.0).max().unwrap_or(0);
    build_record(meta("S", lo, hi.max(lo + 1)), samples).record
}

// ------------------------------------------------------------------- SVG

pub fn parse_svg(svg: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(svg).expect("well-formed SVG")
}

pub fn has_class(n: &roxmltree::Node, class: &str) -> bool {
    n.attribute("class").is_some_and(|c| c.split(' ').any(|p| p == class))
}

/// The `<g class="band">` group of `signal`.
pub fn band<'a, 'i>(doc: &'a roxmltree::Document<'i>, signal: &str) -> roxmltree::Node<'a, 'i> {
    doc.descendants()
        .find(|n| has_class(n, "band") && n.attribute("data-signal") == Some(signal))
        .unwrap_or_else(|| panic!("no band for {signal}"))
}

/// Rects of `class` in a band, keyed by their data-hour.
pub fn rects_by_hour<'a, 'i>(band: roxmltree::Node<'a, 'i>, class: &str) -> BTreeMap<usize, roxmltree::Node<'a, 'i>> {
    band.children()
        .filter(|n| n.is_element() && has_class(n, class))
        .map(|n| (n.attribute("data-hour").unwrap().parse().unwrap(), n))
        .collect()
}

pub fn attr_f64(n: &roxmltree::Node, name: &str) -> f64 {
    n.attribute(name).unwrap_or_else(|| panic!("missing {name}")).parse().unwrap()
}

pub fn count_class(doc: &roxmltree::Document, class: &str) -> usize {
    doc.descendants().filter(|n| has_class(n, class)).count()
}

/// Every position on a 1e-4 grid whose color equals `fill`. Recovers
/// where on the scale an emitted cell sits using only the SVG.
pub fn positions_of(scale: &ColorScale, fill: &str) -> Vec<f64> {
    let fill: Color = fill.parse().unwrap();
    (0..=10_000)
        .map(|i| f64::from(i) / 10_000.0)
        .filter(|&p| scale.map_color(Some(p)) == fill)
        .collect()
}
