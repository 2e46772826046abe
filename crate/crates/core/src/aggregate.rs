//! Hourly aggregation, per-patient baselines and ranges, trailing moving
//! averages and data-day accounting.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PatientRecord;
use crate::signal::SignalId;

pub const SECONDS_PER_HOUR: i64 = 3600;

/// Index of the local clock hour containing `t`.
pub fn local_hour(t: i64, tz_offset_s: i64) -> i64 {
    (t + tz_offset_s).div_euclid(SECONDS_PER_HOUR)
}

/// UTC timestamp at which local hour `hour` begins.
pub fn local_hour_start_utc(hour: i64, tz_offset_s: i64) -> i64 {
    hour * SECONDS_PER_HOUR - tz_offset_s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowAlarming,
    HighAlarming,
    Bidirectional,
}

impl Direction {
    pub fn default_for(signal: &SignalId) -> Self {
        match signal {
            SignalId::Hrv | SignalId::Spo2 => Direction::LowAlarming,
            _ => Direction::Bidirectional,
        }
    }
}

/// Per-patient display range of one signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalRange {
    pub vmin: f64,
    pub baseline: f64,
    pub vmax: f64,
}

impl SignalRange {
    pub fn is_degenerate(&self) -> bool {
        self.vmin >= self.vmax
    }
}

/// Manual overrides for one signal. Unset fields come from the data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RangeOverride {
    pub vmin: Option<f64>,
    pub vmax: Option<f64>,
    pub baseline: Option<f64>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RangeConfig {
    pub signals: BTreeMap<SignalId, RangeOverride>,
}

impl RangeConfig {
    pub fn get(&self, signal: &SignalId) -> RangeOverride {
        self.signals.get(signal).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        for (signal, o) in &self.signals {
            if let (Some(vmin), Some(vmax)) = (o.vmin, o.vmax) {
                if vmin >= vmax {
                    return Err(Error::Config(format!(
                        "range override for {signal}: vmin {vmin} must be below vmax {vmax}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One signal on the shared hour grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub signal: SignalId,
    /// UTC timestamp of the first bucket.
    pub start_hour: i64,
    /// Hourly means; `None` marks an hour without samples.
    pub values: Vec<Option<f64>>,
    /// Contributing 1 Hz samples per hour.
    pub counts: Vec<u32>,
    /// Set by [`compute_baseline_and_range`].
    pub range: Option<SignalRange>,
    pub direction: Direction,
}

impl HourlySeries {
    pub fn all_missing(signal: SignalId, start_hour: i64, hours: usize) -> Self {
        Self {
            direction: Direction::default_for(&signal),
            signal,
            start_hour,
            values: vec![None; hours],
            counts: vec![0; hours],
            range: None,
        }
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn moving_average(&self, window_hours: usize) -> Result<Vec<Option<f64>>> {
        moving_average(&self.values, window_hours)
    }
}

/// All signals of one patient on one hour grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyGrid {
    /// Local hour index of the first bucket (see [`local_hour`]).
    pub first_local_hour: i64,
    pub hours: usize,
    pub tz_offset_s: i64,
    pub series: BTreeMap<SignalId, HourlySeries>,
}

impl HourlyGrid {
    /// A grid of `hours` empty buckets for each core signal.
    pub fn all_missing(first_local_hour: i64, hours: usize, tz_offset_s: i64) -> Self {
        let start = local_hour_start_utc(first_local_hour, tz_offset_s);
        let series = SignalId::CORE
            .iter()
            .map(|s| (s.clone(), HourlySeries::all_missing(s.clone(), start, hours)))
            .collect();
        Self {
            first_local_hour,
            hours,
            tz_offset_s,
            series,
        }
    }

    /// An all-missing grid covering the UTC interval `[start, end]`.
    pub fn all_missing_over(start: i64, end: i64, tz_offset_s: i64) -> Self {
        let first = local_hour(start, tz_offset_s);
        let last = local_hour(end.max(start), tz_offset_s);
        Self::all_missing(first, (last - first + 1) as usize, tz_offset_s)
    }

    pub fn start_utc(&self) -> i64 {
        local_hour_start_utc(self.first_local_hour, self.tz_offset_s)
    }

    pub fn is_empty(&self) -> bool {
        self.hours == 0
    }

    pub fn get(&self, signal: &SignalId) -> Option<&HourlySeries> {
        self.series.get(signal)
    }

    /// Hours with a present value in at least one core signal.
    pub fn useful_hours(&self) -> usize {
        (0..self.hours)
            .filter(|&h| {
                self.series
                    .iter()
                    .filter(|(id, _)| id.is_core())
                    .any(|(_, s)| s.values[h].is_some())
            })
            .count()
    }

    /// Map a UTC timestamp to its bucket, if on the grid.
    pub fn hour_index(&self, t: i64) -> Option<usize> {
        let idx = local_hour(t, self.tz_offset_s) - self.first_local_hour;
        (0..self.hours as i64).contains(&idx).then_some(idx as usize)
    }

    /// `hour_start,signal,mean,count`, hour-major, `NAN` for missing hours.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "hour_start,signal,mean,count")?;
        for h in 0..self.hours {
            let start = local_hour_start_utc(self.first_local_hour + h as i64, self.tz_offset_s);
            for (signal, s) in &self.series {
                match s.values[h] {
                    Some(v) => writeln!(out, "{start},{signal},{v},{}", s.counts[h])?,
                    None => writeln!(out, "{start},{signal},NAN,{}", s.counts[h])?,
                }
            }
        }
        Ok(())
    }

    /// Read back a grid written by [`HourlyGrid::write_csv`].
    pub fn read_csv<R: Read>(source: R, tz_offset_s: i64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let mut rows: Vec<(i64, SignalId, Option<f64>, u32)> = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| Error::Format(format!("hourly csv: {e}")))?;
            let bad = || Error::Format(format!("hourly csv: malformed row {:?}", row.as_slice()));
            if row.len() != 4 {
                return Err(bad());
            }
            let start: i64 = row[0].parse().map_err(|_| bad())?;
            let mean = if row[2].eq_ignore_ascii_case("nan") {
                None
            } else {
                Some(row[2].parse::<f64>().map_err(|_| bad())?)
            };
            let count: u32 = row[3].parse().map_err(|_| bad())?;
            rows.push((start, row[1].parse().unwrap(), mean, count));
        }
        let Some(first) = rows.iter().map(|r| r.0).min() else {
            return Ok(Self::all_missing(0, 0, tz_offset_s));
        };
        let last = rows.iter().map(|r| r.0).max().unwrap();
        let first_local = local_hour(first, tz_offset_s);
        let hours = (local_hour(last, tz_offset_s) - first_local + 1) as usize;
        let mut grid = Self::all_missing(first_local, hours, tz_offset_s);
        for (start, signal, mean, count) in rows {
            let h = (local_hour(start, tz_offset_s) - first_local) as usize;
            let series = grid.series.entry(signal.clone()).or_insert_with(|| {
                HourlySeries::all_missing(signal, local_hour_start_utc(first_local, tz_offset_s), hours)
            });
            series.values[h] = mean;
            series.counts[h] = count;
        }
        Ok(grid)
    }
}

/// Arithmetic mean of each local clock hour's samples, per signal.
///
/// The grid runs from the hour of the earliest sample to the hour of the
/// latest, across all signals, so every band shares one axis. Core
/// signals always get a series, all-missing if they had no samples.
pub fn hourly_mean(record: &PatientRecord, tz_offset_s: i64) -> HourlyGrid {
    let Some((first, last)) = record.time_span() else {
        return HourlyGrid::all_missing(0, 0, tz_offset_s);
    };
    let mut grid = HourlyGrid::all_missing_over(first, last, tz_offset_s);
    let first_local = grid.first_local_hour;
    let hours = grid.hours;
    let start = grid.start_utc();

    for (signal, samples) in &record.series {
        let mut sums = vec![0.0f64; hours];
        let mut counts = vec![0u32; hours];
        for s in samples {
            let h = (local_hour(s.t, tz_offset_s) - first_local) as usize;
            sums[h] += s.value;
            counts[h] += 1;
        }
        let values = sums
            .iter()
            .zip(&counts)
            .map(|(&sum, &n)| (n > 0).then(|| sum / f64::from(n)))
            .collect();
        let mut series = HourlySeries::all_missing(signal.clone(), start, hours);
        series.values = values;
        series.counts = counts;
        grid.series.insert(signal.clone(), series);
    }
    grid
}

/// Baseline = unweighted mean of present hourly values, range = their
/// min/max; any override replaces the data-derived value.
pub fn compute_baseline_and_range(mut series: HourlySeries, cfg: &RangeConfig) -> Result<HourlySeries> {
    let o = cfg.get(&series.signal);
    series.direction = o.direction.unwrap_or_else(|| Direction::default_for(&series.signal));

    let (mut n, mut sum, mut lo, mut hi) = (0usize, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for v in series.present() {
        n += 1;
        sum += v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let data_mean = (n > 0).then(|| sum / n as f64);
    let vmin = o.vmin.or((n > 0).then_some(lo));
    let vmax = o.vmax.or((n > 0).then_some(hi));
    let (Some(vmin), Some(vmax)) = (vmin, vmax) else {
        return Err(Error::UndefinedRange(series.signal.to_string()));
    };
    if vmin > vmax {
        return Err(Error::Range { vmin, vmax });
    }
    let Some(baseline) = o.baseline.or(data_mean) else {
        return Err(Error::UndefinedRange(series.signal.to_string()));
    };
    let clamped = baseline.clamp(vmin, vmax);
    if clamped != baseline {
        log::warn!(
            "{}: baseline {baseline} outside configured range [{vmin}, {vmax}], clamped",
            series.signal
        );
    }
    series.range = Some(SignalRange {
        vmin,
        baseline: clamped,
        vmax,
    });
    Ok(series)
}

/// Annotate every series of a grid. Series whose range is undefined keep
/// `range = None`; a warning is returned for each.
pub fn annotate_grid(grid: &mut HourlyGrid, cfg: &RangeConfig) -> Vec<String> {
    let mut warnings = Vec::new();
    let signals: Vec<SignalId> = grid.series.keys().cloned().collect();
    for signal in signals {
        let series = grid.series.remove(&signal).unwrap();
        let fallback = series.clone();
        let annotated = match compute_baseline_and_range(series, cfg) {
            Ok(s) => {
                if s.range.is_some_and(|r| r.is_degenerate()) {
                    warnings.push(format!("{signal}: degenerate range (vmin = vmax), rendering at center color"));
                }
                s
            }
            Err(e) => {
                warnings.push(format!("{signal}: {e}"));
                let mut s = fallback;
                s.direction = cfg.get(&signal).direction.unwrap_or_else(|| Direction::default_for(&signal));
                s
            }
        };
        grid.series.insert(signal, annotated);
    }
    warnings
}

/// Trailing mean over the current hour and the `window_hours - 1` before
/// it, counting present values only. Missing when the whole window is.
pub fn moving_average(values: &[Option<f64>], window_hours: usize) -> Result<Vec<Option<f64>>> {
    if window_hours == 0 {
        return Err(Error::Config("moving-average window must be at least 1 hour".into()));
    }
    let out = (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window_hours);
            let (sum, n) = values[lo..=i]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (n > 0).then(|| sum / n as f64)
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DayCounts {
    pub admitted_days: f64,
    pub recorded_days: f64,
    pub useful_days: f64,
}

impl DayCounts {
    pub fn from_parts(admitted_days: f64, hr_seconds: usize, useful_hours: usize) -> Self {
        Self {
            admitted_days,
            recorded_days: hr_seconds as f64 / 86_400.0,
            useful_days: useful_hours as f64 / 24.0,
        }
    }
}

/// Admitted days from the metadata, recorded days from the seconds with an
/// HR sample before any filtering, useful days from the hours of the
/// filtered grid with a value in at least one core signal.
pub fn data_day_counts(raw: &PatientRecord, filtered: &HourlyGrid) -> DayCounts {
    DayCounts::from_parts(
        raw.meta.admitted_days(),
        raw.signal(&SignalId::Hr).len(),
        filtered.useful_hours(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_record, PatientMeta};
    use crate::signal::VitalSample;

    fn hr_record(samples: &[(i64, f64)]) -> PatientRecord {
        let meta = PatientMeta::new("P", 0, 10 * 86_400).unwrap();
        let vs = samples.iter().map(|&(t, v)| VitalSample {
            timestamp: t,
            signal: SignalId::Hr,
            value: v,
            quality: None,
        });
        build_record(meta, vs).record
    }

    fn series(values: &[Option<f64>]) -> HourlySeries {
        let mut s = HourlySeries::all_missing(SignalId::Hr, 0, values.len());
        s.values = values.to_vec();
        s
    }

    #[test]
    fn constant_hour_mean() {
        let samples: Vec<_> = (0..3600).map(|t| (t, 72.0)).collect();
        let grid = hourly_mean(&hr_record(&samples), 0);
        assert_eq!(grid.hours, 1);
        assert_eq!(grid.get(&SignalId::Hr).unwrap().values, vec![Some(72.0)]);
        assert_eq!(grid.get(&SignalId::Hr).unwrap().counts, vec![3600]);
    }

    #[test]
    fn two_point_mean() {
        let grid = hourly_mean(&hr_record(&[(10, 60.0), (20, 80.0)]), 0);
        assert_eq!(grid.get(&SignalId::Hr).unwrap().values, vec![Some(70.0)]);
    }

    #[test]
    fn gaps_stay_on_the_grid() {
        let grid = hourly_mean(&hr_record(&[(10, 60.0), (7300, 80.0)]), 0);
        assert_eq!(grid.hours, 3);
        assert_eq!(
            grid.get(&SignalId::Hr).unwrap().values,
            vec![Some(60.0), None, Some(80.0)]
        );
        // Core signals without samples are present and all-missing.
        assert_eq!(grid.get(&SignalId::Temp).unwrap().values, vec![None; 3]);
    }

    #[test]
    fn timezone_shifts_bucket_edges() {
        // At UTC+00:30 the local hour boundary sits at 00:30 UTC.
        let record = hr_record(&[(1799, 60.0), (1800, 80.0)]);
        let grid = hourly_mean(&record, 1800);
        assert_eq!(grid.hours, 2);
        assert_eq!(grid.start_utc(), -1800);
        assert_eq!(grid.hour_index(1800), Some(1));
        assert_eq!(grid.get(&SignalId::Hr).unwrap().values, vec![Some(60.0), Some(80.0)]);
    }

    #[test]
    fn empty_record_gives_empty_grid() {
        let grid = hourly_mean(&hr_record(&[]), 0);
        assert!(grid.is_empty());
        assert_eq!(grid.useful_hours(), 0);
    }

    #[test]
    fn baseline_and_range_from_three_points() {
        let s = compute_baseline_and_range(
            series(&[Some(60.0), None, Some(70.0), Some(80.0)]),
            &RangeConfig::default(),
        )
        .unwrap();
        assert_eq!(s.range, Some(SignalRange { vmin: 60.0, baseline: 70.0, vmax: 80.0 }));
        assert_eq!(s.direction, Direction::Bidirectional);
    }

    #[test]
    fn singleton_range_is_degenerate() {
        let s = compute_baseline_and_range(series(&[Some(36.5)]), &RangeConfig::default()).unwrap();
        let r = s.range.unwrap();
        assert_eq!((r.vmin, r.baseline, r.vmax), (36.5, 36.5, 36.5));
        assert!(r.is_degenerate());
    }

    #[test]
    fn all_missing_without_override_is_undefined() {
        let err = compute_baseline_and_range(series(&[None, None]), &RangeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UndefinedRange(_)));
    }

    #[test]
    fn overrides_replace_data_range() {
        let mut cfg = RangeConfig::default();
        cfg.signals.insert(
            SignalId::Hr,
            RangeOverride { vmin: Some(90.0), vmax: Some(100.0), baseline: None, direction: None },
        );
        let s = compute_baseline_and_range(series(&[Some(95.0), Some(97.0)]), &cfg).unwrap();
        assert_eq!(s.range, Some(SignalRange { vmin: 90.0, baseline: 96.0, vmax: 100.0 }));
        // Fully overridden ranges work without data.
        cfg.signals.get_mut(&SignalId::Hr).unwrap().baseline = Some(95.0);
        assert!(compute_baseline_and_range(series(&[None]), &cfg).is_ok());
    }

    #[test]
    fn inverted_override_is_a_config_error() {
        let mut cfg = RangeConfig::default();
        cfg.signals.insert(
            SignalId::Spo2,
            RangeOverride { vmin: Some(100.0), vmax: Some(90.0), ..Default::default() },
        );
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn moving_average_cases() {
        let c = moving_average(&[Some(70.0); 6], 4).unwrap();
        assert!(c.iter().all(|v| *v == Some(70.0)));

        let v = moving_average(&[Some(10.0), Some(20.0), Some(30.0), Some(40.0)], 4).unwrap();
        assert_eq!(v[3], Some(25.0));
        assert_eq!(v[0], Some(10.0));

        let v = moving_average(&[Some(10.0), None, Some(30.0)], 4).unwrap();
        assert_eq!(v[2], Some(20.0));

        let v = moving_average(&[Some(1.0), None, None, None, None], 4).unwrap();
        assert_eq!(v[3], Some(1.0));
        assert_eq!(v[4], None);

        assert!(moving_average(&[Some(1.0)], 0).is_err());
    }

    #[test]
    fn day_counts() {
        let samples: Vec<_> = (0..48 * 3600).map(|t| (t, 70.0)).collect();
        let record = hr_record(&samples);
        let grid = hourly_mean(&record, 0);
        let d = data_day_counts(&record, &grid);
        assert_eq!(d.useful_days, 2.0);
        assert_eq!(d.recorded_days, 2.0);
        assert_eq!(d.admitted_days, 10.0);

        let empty = hr_record(&[]);
        let d = data_day_counts(&empty, &hourly_mean(&empty, 0));
        assert_eq!((d.recorded_days, d.useful_days), (0.0, 0.0));
    }

    #[test]
    fn hourly_csv_round_trips() {
        let grid = hourly_mean(&hr_record(&[(10, 60.5), (7300, 80.0)]), 3600);
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("hour_start,signal,mean,count\n"));
        assert!(text.contains(",HRV,NAN,0\n"));
        let back = HourlyGrid::read_csv(buf.as_slice(), 3600).unwrap();
        assert_eq!(back, grid);
    }
}
