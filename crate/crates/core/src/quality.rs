//! The cleansing cascade: admission cropping, quality thresholding and
//! heart-rate presence masking, plus before/after quality summaries.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PatientRecord;
use crate::signal::{Sample, SignalId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Percent; samples with a quality below this are dropped.
    pub quality_threshold: u8,
    pub require_hr_presence: bool,
    pub crop_to_admission: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            quality_threshold: 50,
            require_hr_presence: true,
            crop_to_admission: true,
        }
    }
}

impl FilterConfig {
    pub fn with_threshold(threshold: i64) -> Result<Self> {
        let cfg = Self {
            quality_threshold: u8::try_from(threshold).unwrap_or(u8::MAX),
            ..Self::default()
        };
        if !(0..=100).contains(&threshold) {
            return Err(Error::Config(format!(
                "quality threshold {threshold} outside 0..=100"
            )));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.quality_threshold > 100 {
            return Err(Error::Config(format!(
                "quality threshold {} outside 0..=100",
                self.quality_threshold
            )));
        }
        Ok(())
    }
}

/// Drop every sample outside the closed admission interval.
pub fn crop_to_admission(mut record: PatientRecord) -> PatientRecord {
    let (start, end) = (record.meta.admission_start, record.meta.admission_end);
    for samples in record.series.values_mut() {
        samples.retain(|s| s.t >= start && s.t <= end);
    }
    record.drop_empty_series();
    record
}

/// Remove every non-HR sample at a second where HR has no sample.
pub fn mask_by_heart_rate(mut record: PatientRecord) -> PatientRecord {
    let hr: Vec<i64> = record.signal(&SignalId::Hr).iter().map(|s| s.t).collect();
    for (signal, samples) in record.series.iter_mut() {
        if *signal == SignalId::Hr {
            continue;
        }
        retain_present(samples, &hr);
    }
    record.drop_empty_series();
    record
}

/// Both inputs are sorted ascending; walk them together.
fn retain_present(samples: &mut Vec<Sample>, hr_times: &[i64]) {
    let mut j = 0;
    samples.retain(|s| {
        while j < hr_times.len() && hr_times[j] < s.t {
            j += 1;
        }
        j < hr_times.len() && hr_times[j] == s.t
    });
}

/// Drop samples whose quality is below the threshold. Samples without a
/// quality value always pass.
pub fn filter_by_quality(mut record: PatientRecord, cfg: &FilterConfig) -> PatientRecord {
    let threshold = cfg.quality_threshold;
    for samples in record.series.values_mut() {
        samples.retain(|s| s.quality.is_none_or(|q| q >= threshold));
    }
    record.drop_empty_series();
    record
}

/// Run the full cascade: crop, threshold, then mask on the surviving HR.
///
/// Masking last means a second whose HR sample failed the threshold also
/// loses every other channel, so the output satisfies "no non-HR sample
/// without HR" and the cascade is idempotent.
pub fn apply_cascade(record: PatientRecord, cfg: &FilterConfig) -> PatientRecord {
    let mut record = record;
    if cfg.crop_to_admission {
        record = crop_to_admission(record);
    }
    record = filter_by_quality(record, cfg);
    if cfg.require_hr_presence {
        record = mask_by_heart_rate(record);
    }
    record
}

/// Running per-signal quality totals. Cohort summaries are built by
/// merging one accumulator per patient.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QualityAccumulator {
    totals: BTreeMap<SignalId, QualityTotals>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct QualityTotals {
    samples: u64,
    with_quality: u64,
    quality_sum: u64,
}

impl QualityAccumulator {
    pub fn from_record(record: &PatientRecord) -> Self {
        let mut acc = Self::default();
        acc.add_record(record);
        acc
    }

    pub fn add_record(&mut self, record: &PatientRecord) {
        for (signal, samples) in &record.series {
            let t = self.totals.entry(signal.clone()).or_default();
            t.samples += samples.len() as u64;
            for q in samples.iter().filter_map(|s| s.quality) {
                t.with_quality += 1;
                t.quality_sum += u64::from(q);
            }
        }
    }

    pub fn merge(&mut self, other: &QualityAccumulator) {
        for (signal, o) in &other.totals {
            let t = self.totals.entry(signal.clone()).or_default();
            t.samples += o.samples;
            t.with_quality += o.with_quality;
            t.quality_sum += o.quality_sum;
        }
    }

    fn mean(&self, signal: &SignalId) -> Option<f64> {
        let t = self.totals.get(signal)?;
        (t.with_quality > 0).then(|| t.quality_sum as f64 / t.with_quality as f64)
    }

    fn count(&self, signal: &SignalId) -> u64 {
        self.totals.get(signal).map_or(0, |t| t.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalQuality {
    pub signal: SignalId,
    /// `None` when the signal has no quality-bearing samples ("n/a").
    pub mean_before: Option<f64>,
    pub mean_after: Option<f64>,
    pub n_before: u64,
    pub n_after: u64,
}

/// Mean device quality per signal before and after filtering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitySummary {
    /// Core signals first, always present; then any other channel seen.
    pub signals: Vec<SignalQuality>,
}

impl QualitySummary {
    pub fn from_accumulators(before: &QualityAccumulator, after: &QualityAccumulator) -> Self {
        let mut ids: Vec<SignalId> = SignalId::CORE.to_vec();
        for id in before.totals.keys().chain(after.totals.keys()) {
            if !ids.contains(id) {
                ids.push(id.clone());
            }
        }
        ids.sort();
        let signals = ids
            .into_iter()
            .map(|signal| SignalQuality {
                mean_before: before.mean(&signal),
                mean_after: after.mean(&signal),
                n_before: before.count(&signal),
                n_after: after.count(&signal),
                signal,
            })
            .collect();
        Self { signals }
    }

    pub fn get(&self, signal: &SignalId) -> Option<&SignalQuality> {
        self.signals.iter().find(|s| s.signal == *signal)
    }

    /// `signal,mean_q_before,mean_q_after,n_before,n_after`
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "signal,mean_q_before,mean_q_after,n_before,n_after")?;
        let fmt = |m: Option<f64>| m.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        for s in &self.signals {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.signal,
                fmt(s.mean_before),
                fmt(s.mean_after),
                s.n_before,
                s.n_after
            )?;
        }
        Ok(())
    }
}

/// Summarize the same patients before and after the cascade.
pub fn quality_summary<'a, B, A>(before: B, after: A) -> QualitySummary
where
    B: IntoIterator<Item = &'a PatientRecord>,
    A: IntoIterator<Item = &'a PatientRecord>,
{
    let mut acc_before = QualityAccumulator::default();
    for r in before {
        acc_before.add_record(r);
    }
    let mut acc_after = QualityAccumulator::default();
    for r in after {
        acc_after.add_record(r);
    }
    QualitySummary::from_accumulators(&acc_before, &acc_after)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_record, PatientMeta};
    use crate::signal::VitalSample;

    fn vs(t: i64, signal: SignalId, value: f64, quality: Option<u8>) -> VitalSample {
        VitalSample { timestamp: t, signal, value, quality }
    }

    fn record(samples: Vec<VitalSample>) -> PatientRecord {
        let meta = PatientMeta::new("P", 100, 200).unwrap();
        build_record(meta, samples).record
    }

    #[test]
    fn crop_keeps_closed_interval() {
        let r = record(vec![
            vs(99, SignalId::Hr, 70.0, None),
            vs(100, SignalId::Hr, 71.0, None),
            vs(200, SignalId::Hr, 72.0, None),
            vs(201, SignalId::Hr, 73.0, None),
        ]);
        let out = crop_to_admission(r);
        let ts: Vec<i64> = out.signal(&SignalId::Hr).iter().map(|s| s.t).collect();
        assert_eq!(ts, [100, 200]);
    }

    #[test]
    fn mask_removes_samples_without_hr() {
        let r = record(vec![
            vs(110, SignalId::Hr, 70.0, None),
            vs(110, SignalId::Spo2, 96.0, None),
            vs(111, SignalId::Rr, 18.0, None),
        ]);
        let out = mask_by_heart_rate(r);
        assert_eq!(out.signal(&SignalId::Spo2).len(), 1);
        assert!(out.signal(&SignalId::Rr).is_empty());
        assert!(!out.series.contains_key(&SignalId::Rr));
    }

    #[test]
    fn mask_is_identity_when_hr_is_everywhere() {
        let mut samples = Vec::new();
        for t in 100..150 {
            samples.push(vs(t, SignalId::Hr, 70.0, Some(90)));
            samples.push(vs(t, SignalId::Temp, 36.8, None));
        }
        let r = record(samples);
        assert_eq!(mask_by_heart_rate(r.clone()), r);
    }

    #[test]
    fn threshold_is_closed_and_skips_quality_less_samples() {
        let r = record(vec![
            vs(110, SignalId::Hr, 80.0, Some(49)),
            vs(111, SignalId::Hr, 80.0, Some(50)),
            vs(110, SignalId::Temp, 36.8, None),
        ]);
        let out = filter_by_quality(r, &FilterConfig::default());
        assert_eq!(out.signal(&SignalId::Hr).len(), 1);
        assert_eq!(out.signal(&SignalId::Hr)[0].t, 111);
        assert_eq!(out.signal(&SignalId::Temp).len(), 1);
    }

    #[test]
    fn cascade_masks_on_post_threshold_hr() {
        let r = record(vec![
            vs(110, SignalId::Hr, 80.0, Some(10)),
            vs(110, SignalId::Rr, 18.0, Some(90)),
        ]);
        let out = apply_cascade(r, &FilterConfig::default());
        assert!(out.is_empty());
    }

    #[test]
    fn threshold_bounds_are_validated() {
        assert!(FilterConfig::with_threshold(101).is_err());
        assert!(FilterConfig::with_threshold(-1).is_err());
        assert_eq!(FilterConfig::with_threshold(100).unwrap().quality_threshold, 100);
    }

    #[test]
    fn summary_means_before_and_after() {
        let before = record(vec![
            vs(110, SignalId::Hr, 80.0, Some(40)),
            vs(111, SignalId::Hr, 80.0, Some(60)),
        ]);
        let after = filter_by_quality(before.clone(), &FilterConfig::default());
        let summary = quality_summary([&before], [&after]);
        let hr = summary.get(&SignalId::Hr).unwrap();
        assert_eq!(hr.mean_before, Some(50.0));
        assert_eq!(hr.mean_after, Some(60.0));
        assert_eq!((hr.n_before, hr.n_after), (2, 1));
        let temp = summary.get(&SignalId::Temp).unwrap();
        assert_eq!(temp.mean_before, None);
    }

    #[test]
    fn summary_all_perfect_quality() {
        let r = record((100..110).map(|t| vs(t, SignalId::Rr, 16.0, Some(100))).collect());
        let after = apply_cascade(r.clone(), &FilterConfig { require_hr_presence: false, ..Default::default() });
        let s = quality_summary([&r], [&after]);
        let rr = s.get(&SignalId::Rr).unwrap();
        assert_eq!(rr.mean_before, Some(100.0));
        assert_eq!(rr.mean_after, Some(100.0));
    }

    #[test]
    fn summary_csv_reports_na() {
        let r = record(vec![vs(110, SignalId::Hr, 80.0, Some(75))]);
        let s = quality_summary([&r], [&r]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("signal,mean_q_before,mean_q_after,n_before,n_after\n"));
        assert!(text.contains("HR,75.00,75.00,1,1\n"));
        assert!(text.contains("TEMP,n/a,n/a,0,0\n"));
    }
}
