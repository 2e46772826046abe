//! CSV ingestion of per-second samples and patient metadata.
//!
//! The canonical sample file is long ("tidy") CSV:
//!
//! ```text
//! timestamp,signal,value,quality
//! 1583020800,HR,72,95
//! 1583020800,TEMP,36.8,
//! ```
//!
//! A wide layout (`timestamp,HR,HR_quality,RR,...`) is accepted with
//! [`SampleFormat::Wide`] and converted to long rows at parse time.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Sample, SignalId, VitalSample};

pub const SAMPLE_HEADER: &str = "timestamp,signal,value,quality";
pub const META_HEADER: &str = "patient_id,admission_start,admission_end,age,sex";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    #[default]
    Long,
    Wide,
}

/// A non-fatal problem found while reading or assembling input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based physical line in the source file, when the problem has one.
    pub line: Option<u64>,
    pub message: String,
}

impl Diagnostic {
    fn at(line: u64, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} line {}", self.message, line),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Default)]
pub struct ParsedSamples {
    pub samples: Vec<VitalSample>,
    pub diagnostics: Vec<Diagnostic>,
    /// Data rows seen, header excluded.
    pub rows: u64,
}

/// Parse a sample stream. Malformed rows are skipped and reported; the
/// parse fails outright only when the stream is unreadable or when more
/// than half of the data rows are malformed.
pub fn parse_samples_csv<R: Read>(source: R, format: SampleFormat) -> Result<ParsedSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut out = ParsedSamples::default();
    let mut malformed = 0u64;
    let mut record = csv::StringRecord::new();
    let mut wide: Option<WideColumns> = None;
    let mut first = true;

    loop {
        match reader.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => {
                    let csv::ErrorKind::Io(io) = e.into_kind() else {
                        unreachable!()
                    };
                    return Err(Error::Stream(io));
                }
                _ => {
                    // Invalid UTF-8 and similar row-local problems.
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    out.rows += 1;
                    malformed += 1;
                    out.diagnostics.push(Diagnostic::at(line, format!("unreadable row ({e})")));
                    continue;
                }
            },
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if first {
            first = false;
            let is_header = record
                .get(0)
                .is_some_and(|f| f.eq_ignore_ascii_case("timestamp"));
            match format {
                SampleFormat::Long if is_header => continue,
                SampleFormat::Long => {}
                SampleFormat::Wide if is_header => {
                    wide = Some(WideColumns::from_header(&record)?);
                    continue;
                }
                SampleFormat::Wide => {
                    return Err(Error::Format(
                        "wide sample format requires a header row starting with `timestamp`".into(),
                    ))
                }
            }
        }
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.rows += 1;
        let parsed = match &wide {
            None => parse_long_row(&record).map(|s| vec![s]),
            Some(cols) => cols.parse_row(&record),
        };
        match parsed {
            Ok(samples) => out.samples.extend(samples),
            Err(msg) => {
                malformed += 1;
                out.diagnostics.push(Diagnostic::at(line, msg));
            }
        }
    }

    if out.rows > 0 && malformed * 2 > out.rows {
        return Err(Error::Format(format!(
            "{malformed} of {} rows malformed; is this a sample file?",
            out.rows
        )));
    }
    Ok(out)
}

fn parse_long_row(record: &csv::StringRecord) -> std::result::Result<VitalSample, String> {
    if record.len() < 3 || record.len() > 4 {
        return Err(format!("expected 3 or 4 fields, found {}", record.len()));
    }
    let timestamp = parse_timestamp_field(&record[0])?;
    if record[1].is_empty() {
        return Err("empty signal name".into());
    }
    let signal: SignalId = record[1].parse().unwrap();
    let value = parse_value(&record[2])?;
    let quality = match record.get(3) {
        None | Some("") => None,
        Some(q) => Some(parse_quality(q)?),
    };
    Ok(VitalSample {
        timestamp,
        signal,
        value,
        quality,
    })
}

fn parse_timestamp_field(field: &str) -> std::result::Result<i64, String> {
    field
        .parse::<i64>()
        .map_err(|_| format!("invalid timestamp `{field}`"))
}

fn parse_value(field: &str) -> std::result::Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("invalid value `{field}`"))?;
    if !v.is_finite() {
        return Err("non-finite value".into());
    }
    Ok(v)
}

fn parse_quality(field: &str) -> std::result::Result<u8, String> {
    let q: f64 = field
        .parse()
        .map_err(|_| format!("invalid quality `{field}`"))?;
    if !(0.0..=100.0).contains(&q) || q.fract() != 0.0 {
        return Err(format!("quality `{field}` outside integer range 0..=100"));
    }
    Ok(q as u8)
}

struct WideColumns {
    /// (value column, signal, optional quality column)
    channels: Vec<(usize, SignalId, Option<usize>)>,
}

impl WideColumns {
    fn from_header(header: &csv::StringRecord) -> Result<Self> {
        let names: Vec<&str> = header.iter().collect();
        let mut channels = Vec::new();
        for (i, name) in names.iter().enumerate().skip(1) {
            if quality_base(name).is_some() {
                continue;
            }
            let quality = names.iter().position(|other| {
                quality_base(other).is_some_and(|base| base.eq_ignore_ascii_case(name))
            });
            channels.push((i, name.parse().unwrap(), quality));
        }
        if channels.is_empty() {
            return Err(Error::Format("wide header names no signal columns".into()));
        }
        Ok(Self { channels })
    }

    fn parse_row(&self, record: &csv::StringRecord) -> std::result::Result<Vec<VitalSample>, String> {
        let timestamp = parse_timestamp_field(record.get(0).unwrap_or(""))?;
        let mut samples = Vec::with_capacity(self.channels.len());
        for (col, signal, qcol) in &self.channels {
            let cell = record.get(*col).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let value = parse_value(cell)?;
            let quality = match qcol.and_then(|q| record.get(q)) {
                None | Some("") => None,
                Some(q) => Some(parse_quality(q)?),
            };
            samples.push(VitalSample {
                timestamp,
                signal: signal.clone(),
                value,
                quality,
            });
        }
        Ok(samples)
    }
}

fn quality_base(name: &str) -> Option<&str> {
    let lower = name.to_ascii_lowercase();
    lower
        .strip_suffix("_quality")
        .map(|base| &name[..base.len()])
}

/// Write samples as canonical long CSV, header included.
pub fn write_samples_csv<'a, W, I>(mut out: W, samples: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a VitalSample>,
{
    writeln!(out, "{SAMPLE_HEADER}")?;
    for s in samples {
        write_sample_row(&mut out, &s.signal, &s.sample())?;
    }
    Ok(())
}

/// Write one canonical long-CSV row.
pub fn write_sample_row<W: Write>(out: &mut W, signal: &SignalId, s: &Sample) -> std::io::Result<()> {
    match s.quality {
        Some(q) => writeln!(out, "{},{},{},{}", s.t, signal, s.value, q),
        None => writeln!(out, "{},{},{},", s.t, signal, s.value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
    Other,
}

impl Sex {
    fn parse(field: &str) -> Option<Self> {
        match field.to_ascii_lowercase().as_str() {
            "" => None,
            "f" | "female" | "w" => Some(Sex::Female),
            "m" | "male" => Some(Sex::Male),
            _ => Some(Sex::Other),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "f",
            Sex::Male => "m",
            Sex::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientMeta {
    pub patient_id: String,
    /// UTC seconds.
    pub admission_start: i64,
    /// UTC seconds.
    pub admission_end: i64,
    pub age: Option<u32>,
    pub sex: Option<Sex>,
}

impl PatientMeta {
    pub fn new(patient_id: impl Into<String>, admission_start: i64, admission_end: i64) -> Result<Self> {
        let meta = Self {
            patient_id: patient_id.into(),
            admission_start,
            admission_end,
            age: None,
            sex: None,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.admission_start >= self.admission_end {
            return Err(Error::Format(format!(
                "patient {}: admission_start must precede admission_end",
                self.patient_id
            )));
        }
        Ok(())
    }

    pub fn admitted_days(&self) -> f64 {
        (self.admission_end - self.admission_start) as f64 / 86_400.0
    }
}

/// Accepts epoch seconds or ISO-8601 (RFC 3339, naive date-time taken as
/// UTC, or a bare date at UTC midnight).
pub fn parse_timestamp(field: &str) -> Result<i64> {
    let field = field.trim();
    if let Ok(secs) = field.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(field) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(field, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(field, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp());
    }
    Err(Error::Format(format!("unrecognized timestamp `{field}`")))
}

/// Parse a metadata CSV. Any malformed row is fatal: metadata defines the
/// admission windows everything else is cropped to.
pub fn parse_meta_csv<R: Read>(source: R) -> Result<Vec<PatientMeta>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("metadata header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(id_col), Some(start_col), Some(end_col)) =
        (col("patient_id"), col("admission_start"), col("admission_end"))
    else {
        return Err(Error::Format(format!("metadata header must be `{META_HEADER}`")));
    };
    let age_col = col("age");
    let sex_col = col("sex");

    let mut metas = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Format(format!("metadata: {e}")))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let get = |c: usize| row.get(c).unwrap_or("");
        let wrap = |e: Error| Error::Format(format!("metadata line {line}: {e}"));
        let age = match age_col.map(get) {
            None | Some("") => None,
            Some(a) => Some(
                a.parse::<f64>()
                    .ok()
                    .filter(|a| a.is_finite() && *a >= 0.0)
                    .ok_or_else(|| wrap(Error::Format(format!("invalid age `{a}`"))))?
                    as u32,
            ),
        };
        let meta = PatientMeta {
            patient_id: get(id_col).to_string(),
            admission_start: parse_timestamp(get(start_col)).map_err(wrap)?,
            admission_end: parse_timestamp(get(end_col)).map_err(wrap)?,
            age,
            sex: sex_col.map(get).and_then(Sex::parse),
        };
        if meta.patient_id.is_empty() {
            return Err(wrap(Error::Format("empty patient_id".into())));
        }
        meta.validate().map_err(wrap)?;
        metas.push(meta);
    }
    Ok(metas)
}

pub fn write_meta_csv<W: Write>(mut out: W, metas: &[PatientMeta]) -> std::io::Result<()> {
    writeln!(out, "{META_HEADER}")?;
    for m in metas {
        let age = m.age.map(|a| a.to_string()).unwrap_or_default();
        let sex = m.sex.map(Sex::as_str).unwrap_or("");
        writeln!(
            out,
            "{},{},{},{},{}",
            m.patient_id, m.admission_start, m.admission_end, age, sex
        )?;
    }
    Ok(())
}

/// Patient metadata plus time-ordered per-signal series.
///
/// Each series is strictly increasing in time, so there is at most one
/// sample per (signal, second).
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub meta: PatientMeta,
    pub series: BTreeMap<SignalId, Vec<Sample>>,
}

impl PatientRecord {
    pub fn empty(meta: PatientMeta) -> Self {
        Self {
            meta,
            series: BTreeMap::new(),
        }
    }

    pub fn signal(&self, id: &SignalId) -> &[Sample] {
        self.series.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sample_count(&self) -> usize {
        self.series.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.series.values().all(Vec::is_empty)
    }

    /// Earliest and latest timestamp over all signals.
    pub fn time_span(&self) -> Option<(i64, i64)> {
        let first = self.series.values().filter_map(|s| s.first()).map(|s| s.t).min()?;
        let last = self.series.values().filter_map(|s| s.last()).map(|s| s.t).max()?;
        Some((first, last))
    }

    /// Flatten in canonical order: by signal, then by time.
    pub fn to_samples(&self) -> Vec<VitalSample> {
        self.series
            .iter()
            .flat_map(|(signal, samples)| {
                samples.iter().map(move |s| VitalSample {
                    timestamp: s.t,
                    signal: signal.clone(),
                    value: s.value,
                    quality: s.quality,
                })
            })
            .collect()
    }

    /// Write this record's samples as canonical long CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SAMPLE_HEADER}")?;
        for (signal, samples) in &self.series {
            for s in samples {
                write_sample_row(&mut out, signal, s)?;
            }
        }
        Ok(())
    }

    pub(crate) fn drop_empty_series(&mut self) {
        self.series.retain(|_, s| !s.is_empty());
    }
}

#[derive(Debug)]
pub struct BuiltRecord {
    pub record: PatientRecord,
    pub diagnostics: Vec<Diagnostic>,
}

/// Group samples by signal and sort by time. Out-of-order input is
/// reordered and duplicate (signal, second) pairs keep the last occurrence;
/// both are reported.
pub fn build_record<I>(meta: PatientMeta, samples: I) -> BuiltRecord
where
    I: IntoIterator<Item = VitalSample>,
{
    let mut diagnostics = Vec::new();
    let mut grouped: BTreeMap<SignalId, Vec<Sample>> = BTreeMap::new();
    let mut rejected = 0usize;
    for vs in samples {
        if !vs.value.is_finite() || vs.quality.is_some_and(|q| q > 100) {
            rejected += 1;
            continue;
        }
        let sample = vs.sample();
        grouped.entry(vs.signal).or_default().push(sample);
    }
    if rejected > 0 {
        diagnostics.push(Diagnostic::general(format!(
            "{rejected} samples rejected for non-finite value or quality above 100"
        )));
    }

    for (signal, samples) in grouped.iter_mut() {
        let out_of_order = samples.windows(2).filter(|w| w[1].t < w[0].t).count();
        if out_of_order > 0 {
            diagnostics.push(Diagnostic::general(format!(
                "{signal}: {out_of_order} out-of-order samples reordered"
            )));
            // Stable, so equal timestamps keep input order and the last wins below.
            samples.sort_by_key(|s| s.t);
        }
        let before = samples.len();
        let mut deduped: Vec<Sample> = Vec::with_capacity(before);
        for s in samples.drain(..) {
            match deduped.last_mut() {
                Some(last) if last.t == s.t => {
                    diagnostics.push(Diagnostic::general(format!(
                        "{signal}: duplicate sample at t={}, keeping last",
                        s.t
                    )));
                    *last = s;
                }
                _ => deduped.push(s),
            }
        }
        *samples = deduped;
    }

    BuiltRecord {
        record: PatientRecord {
            meta,
            series: grouped,
        },
        diagnostics,
    }
}
