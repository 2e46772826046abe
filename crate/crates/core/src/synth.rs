//! Deterministic synthetic patients: five 1 Hz signals with circadian
//! rhythm, disease-course trends, daily charging gaps and quality dropouts.
//!
//! # Randomness
//!
//! All draws come from ChaCha8 ([`rand_chacha::ChaCha8Rng`]) keyed by a
//! 32-byte seed expanded from the 64-bit patient seed with SplitMix64.
//! Uniform reals are `(next_u64() >> 11) * 2^-53`, uniform integers in
//! `[lo, hi]` are `lo + next_u64() % (hi - lo + 1)`. Patient seeds in a
//! cohort are successive SplitMix64 outputs starting from the cohort seed.
//! Nothing here depends on `rand`'s distribution code, so streams stay
//! fixed across dependency upgrades.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::{local_hour, local_hour_start_utc, SECONDS_PER_HOUR};
use crate::error::{Error, Result};
use crate::ingest::{PatientMeta, PatientRecord, Sex};
use crate::render::AnnotationRow;
use crate::signal::{Sample, SignalId};

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th patient of a cohort.
pub fn patient_seed(cohort_seed: u64, index: usize) -> u64 {
    let mut state = cohort_seed;
    let mut out = 0;
    for _ in 0..=index {
        out = splitmix64(&mut state);
    }
    out
}

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Rng(ChaCha8Rng::from_seed(key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in the closed range.
    pub fn range_u64(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo + 1)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Typical,
    Complication,
    Stress,
    ZeroData,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 4] = [
        ProfileKind::Typical,
        ProfileKind::Complication,
        ProfileKind::Stress,
        ProfileKind::ZeroData,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    pub level: f64,
    /// Half peak-to-trough swing; the trough falls at 03:00 local.
    pub circadian_amplitude: f64,
    /// Half-width of the uniform noise.
    pub noise: f64,
    /// Values are rounded to this many decimals.
    pub decimals: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalLevels {
    pub hr: SignalParams,
    pub hrv: SignalParams,
    pub rr: SignalParams,
    pub spo2: SignalParams,
    pub temp: SignalParams,
}

impl Default for SignalLevels {
    fn default() -> Self {
        let p = |level, circadian_amplitude, noise, decimals| SignalParams {
            level,
            circadian_amplitude,
            noise,
            decimals,
        };
        Self {
            hr: p(70.0, 8.0, 3.0, 1),
            // HRV runs opposite to HR: highest at night.
            hrv: p(30.0, -5.0, 4.0, 1),
            rr: p(16.0, 1.5, 1.0, 1),
            spo2: p(96.0, -0.5, 0.8, 1),
            temp: p(36.8, 0.3, 0.1, 2),
        }
    }
}

impl SignalLevels {
    pub fn get(&self, signal: &SignalId) -> Option<&SignalParams> {
        match signal {
            SignalId::Hr => Some(&self.hr),
            SignalId::Hrv => Some(&self.hrv),
            SignalId::Rr => Some(&self.rr),
            SignalId::Spo2 => Some(&self.spo2),
            SignalId::Temp => Some(&self.temp),
            SignalId::Other(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargingGap {
    /// Local clock hour the device goes on the charger.
    pub start_hour: u32,
    pub duration_minutes: u32,
}

impl Default for ChargingGap {
    fn default() -> Self {
        Self {
            start_hour: 7,
            duration_minutes: 60,
        }
    }
}

/// A one-clock-hour surge in HR and RR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressEvent {
    /// Days after the local date of admission.
    pub day: u32,
    pub hour: u32,
    pub hr_bump: f64,
    pub rr_bump: f64,
}

impl Default for StressEvent {
    fn default() -> Self {
        Self {
            day: 5,
            hour: 14,
            hr_bump: 25.0,
            rr_bump: 8.0,
        }
    }
}

/// A sudden deterioration that decays over the following days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspirationEvent {
    /// Days after admission.
    pub day: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub patient_id: String,
    pub kind: ProfileKind,
    pub seed: u64,
    /// UTC seconds.
    pub admission_start: i64,
    pub duration_days: f64,
    pub tz_offset_s: i64,
    pub age: Option<u32>,
    pub sex: Option<Sex>,
    pub levels: SignalLevels,
    /// The device goes on this many hours after admission (rounded up to a
    /// full local hour).
    pub recording_delay_hours: u32,
    /// Recording continues this long after discharge.
    pub recording_overrun_hours: u32,
    pub charging_gap: ChargingGap,
    /// Chance that a given (signal, hour) is a low-quality dropout episode.
    pub dropout_rate: f64,
    pub stress: Option<StressEvent>,
    pub aspiration: Option<AspirationEvent>,
}

impl PatientProfile {
    /// A profile of `kind` with default levels and schedule.
    pub fn new(patient_id: impl Into<String>, kind: ProfileKind, admission_start: i64, duration_days: f64, seed: u64) -> Self {
        Self {
            patient_id: patient_id.into(),
            kind,
            seed,
            admission_start,
            duration_days,
            tz_offset_s: 0,
            age: None,
            sex: None,
            levels: SignalLevels::default(),
            recording_delay_hours: 0,
            recording_overrun_hours: 0,
            charging_gap: ChargingGap::default(),
            dropout_rate: 0.03,
            stress: (kind == ProfileKind::Stress).then(StressEvent::default),
            aspiration: (kind == ProfileKind::Complication).then_some(AspirationEvent {
                day: duration_days * 0.5,
            }),
        }
    }

    pub fn admission_end(&self) -> i64 {
        self.admission_start + (self.duration_days * 86_400.0).round() as i64
    }

    pub fn meta(&self) -> Result<PatientMeta> {
        let mut meta = PatientMeta::new(&self.patient_id, self.admission_start, self.admission_end())?;
        meta.age = self.age;
        meta.sex = self.sex;
        Ok(meta)
    }

    /// UTC start of the stress hour.
    pub fn stress_start(&self) -> Option<i64> {
        let s = self.stress?;
        let admission_day = local_hour(self.admission_start, self.tz_offset_s).div_euclid(24);
        let hour = (admission_day + i64::from(s.day)) * 24 + i64::from(s.hour);
        Some(local_hour_start_utc(hour, self.tz_offset_s))
    }

    pub fn aspiration_time(&self) -> Option<i64> {
        self.aspiration
            .map(|a| self.admission_start + (a.day * 86_400.0).round() as i64)
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("profile {}: {m}", self.patient_id)));
        if !(self.duration_days > 0.0) {
            return bad("duration_days must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1]".into());
        }
        if self.charging_gap.start_hour > 23 || self.charging_gap.duration_minutes >= 24 * 60 {
            return bad("charging gap must start within the day and last under 24 h".into());
        }
        let (start, end) = (self.admission_start, self.admission_end());
        if let Some(t) = self.stress_start() {
            let (rec_start, rec_end) = self.recording_window();
            if t < rec_start.max(start) || t + SECONDS_PER_HOUR > rec_end.min(end) {
                return bad(format!("stress hour at {t} falls outside the recorded admission"));
            }
            if self.in_charging_gap(t) {
                return bad("stress hour overlaps the charging gap".into());
            }
        }
        if let Some(t) = self.aspiration_time() {
            if t < start || t > end {
                return bad(format!("aspiration at {t} falls outside the admission window"));
            }
        }
        Ok(())
    }

    fn in_charging_gap(&self, t: i64) -> bool {
        let g = self.charging_gap;
        let second_of_day = (t + self.tz_offset_s).rem_euclid(86_400);
        let start = i64::from(g.start_hour) * 3600;
        let len = i64::from(g.duration_minutes) * 60;
        (second_of_day - start).rem_euclid(86_400) < len
    }

    /// First and one-past-last recorded second, both on local hour edges.
    fn recording_window(&self) -> (i64, i64) {
        let tz = self.tz_offset_s;
        let on = self.admission_start + i64::from(self.recording_delay_hours) * SECONDS_PER_HOUR;
        let first = local_hour(on - 1, tz) + 1;
        let off = self.admission_end() + i64::from(self.recording_overrun_hours) * SECONDS_PER_HOUR;
        let last = local_hour(off, tz);
        (local_hour_start_utc(first, tz), local_hour_start_utc(last.max(first), tz))
    }
}

/// Deterministic trend offset for `signal`, `day` days after admission.
pub fn trend_offset(kind: ProfileKind, signal: &SignalId, day: f64, aspiration_day: Option<f64>) -> f64 {
    let base = match kind {
        ProfileKind::Typical | ProfileKind::Complication => match signal {
            // Low in the first week, then rising with recovery.
            SignalId::Hr if day < 7.0 => -4.0 - 4.0 * day / 7.0,
            SignalId::Hr => -8.0 + 2.0 * (day - 7.0),
            SignalId::Hrv => (-12.0 + 2.0 * day).min(8.0),
            SignalId::Rr => (3.0 - 0.4 * day).max(-1.0),
            SignalId::Spo2 => (-2.5 + 0.35 * day).min(0.5),
            SignalId::Temp => (0.8 - 0.12 * day).max(0.0),
            SignalId::Other(_) => 0.0,
        },
        ProfileKind::Stress | ProfileKind::ZeroData => 0.0,
    };
    let event = match (kind, aspiration_day) {
        (ProfileKind::Complication, Some(a)) if day >= a => {
            let decay = (-(day - a) / 2.0).exp();
            decay
                * match signal {
                    SignalId::Hr => 18.0,
                    SignalId::Hrv => -8.0,
                    SignalId::Rr => 6.0,
                    SignalId::Spo2 => -4.0,
                    SignalId::Temp => 1.0,
                    SignalId::Other(_) => 0.0,
                }
        }
        _ => 0.0,
    };
    base + event
}

fn has_quality(signal: &SignalId) -> bool {
    !matches!(signal, SignalId::Temp)
}

fn clamp_physiological(signal: &SignalId, v: f64) -> f64 {
    match signal {
        SignalId::Spo2 => v.clamp(50.0, 100.0),
        SignalId::Hrv => v.max(1.0),
        _ => v.max(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub kind: String,
    /// UTC seconds, half-open.
    pub start: i64,
    pub end: i64,
}

/// What the generator knows about a patient, for checking the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub patient_id: String,
    pub kind: ProfileKind,
    pub seed: u64,
    pub tz_offset_s: i64,
    /// Mean of the emitted samples inside the admission window, per local
    /// hour, keyed by the hour's UTC start.
    pub hourly_means: BTreeMap<SignalId, BTreeMap<i64, f64>>,
    /// Hours (UTC start) lost entirely to charging.
    pub gap_hours: Vec<i64>,
    /// Hours (UTC start) whose quality was drawn below 50.
    pub dropout_hours: BTreeMap<SignalId, Vec<i64>>,
    pub events: Vec<GroundTruthEvent>,
    /// Seconds carrying an HR sample, before any cropping.
    pub hr_seconds: usize,
}

impl GroundTruth {
    pub fn event(&self, kind: &str) -> Option<&GroundTruthEvent> {
        self.events.iter().find(|e| e.kind == kind)
    }

    /// True when the pipeline should reproduce this hour's mean exactly.
    pub fn is_clean(&self, signal: &SignalId, hour_start: i64) -> bool {
        let dropped = |s: &SignalId| {
            self.dropout_hours
                .get(s)
                .is_some_and(|h| h.binary_search(&hour_start).is_ok())
        };
        !self.gap_hours.contains(&hour_start) && !dropped(signal) && !dropped(&SignalId::Hr)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedPatient {
    pub profile: PatientProfile,
    pub record: PatientRecord,
    pub truth: GroundTruth,
    pub annotations: Vec<AnnotationRow>,
}

pub fn generate_patient(profile: &PatientProfile) -> Result<GeneratedPatient> {
    let meta = profile.meta()?;
    let mut truth = GroundTruth {
        patient_id: profile.patient_id.clone(),
        kind: profile.kind,
        seed: profile.seed,
        tz_offset_s: profile.tz_offset_s,
        hourly_means: BTreeMap::new(),
        gap_hours: Vec::new(),
        dropout_hours: BTreeMap::new(),
        events: Vec::new(),
        hr_seconds: 0,
    };
    let mut annotations = Vec::new();
    if profile.kind == ProfileKind::ZeroData {
        return Ok(GeneratedPatient {
            profile: profile.clone(),
            record: PatientRecord::empty(meta),
            truth,
            annotations,
        });
    }
    profile.validate()?;

    let tz = profile.tz_offset_s;
    let (rec_start, rec_end) = profile.recording_window();
    let (adm_start, adm_end) = (meta.admission_start, meta.admission_end);
    let first_hour = local_hour(rec_start, tz);
    let hours = ((rec_end - rec_start) / SECONDS_PER_HOUR).max(0) as usize;

    let stress_start = profile.stress_start();
    if let (Some(t), Some(s)) = (stress_start, profile.stress) {
        truth.events.push(GroundTruthEvent {
            kind: "stress".into(),
            start: t,
            end: t + SECONDS_PER_HOUR,
        });
        annotations.push(AnnotationRow {
            patient_id: profile.patient_id.clone(),
            timestamp: t,
            text: format!("stress episode (HR +{}, RR +{})", s.hr_bump, s.rr_bump),
        });
    }
    if let Some(t) = profile.aspiration_time() {
        truth.events.push(GroundTruthEvent {
            kind: "aspiration".into(),
            start: t,
            end: adm_end,
        });
        annotations.push(AnnotationRow {
            patient_id: profile.patient_id.clone(),
            timestamp: t,
            text: "aspiration".into(),
        });
    }

    let mut rng = Rng::new(profile.seed);
    let signals = SignalId::CORE;

    // Dropout table first, so the per-second stream does not depend on it.
    let mut dropout = vec![[false; 5]; hours];
    for (h, row) in dropout.iter_mut().enumerate() {
        let hour_start = local_hour_start_utc(first_hour + h as i64, tz);
        let protected = stress_start == Some(hour_start);
        for (i, signal) in signals.iter().enumerate() {
            let hit = rng.chance(profile.dropout_rate);
            row[i] = hit && has_quality(signal) && !protected;
        }
    }

    let aspiration_day = profile.aspiration.map(|a| a.day);
    let params: Vec<SignalParams> = signals.iter().map(|s| *profile.levels.get(s).unwrap()).collect();
    let scales: Vec<f64> = params.iter().map(|p| 10f64.powi(p.decimals as i32)).collect();
    let capacity = (rec_end - rec_start).max(0) as usize;
    let mut series: Vec<Vec<Sample>> = signals.iter().map(|_| Vec::with_capacity(capacity)).collect();
    let mut sums = vec![vec![(0.0f64, 0u32); hours]; signals.len()];

    for h in 0..hours {
        let hour_start = local_hour_start_utc(first_hour + h as i64, tz);
        let hour_of_day = (first_hour + h as i64).rem_euclid(24) as f64;
        let charging = (0..3600).step_by(60).all(|s| profile.in_charging_gap(hour_start + s));
        if charging {
            truth.gap_hours.push(hour_start);
        }
        for (i, signal) in signals.iter().enumerate() {
            if dropout[h][i] && !charging {
                truth.dropout_hours.entry(signal.clone()).or_default().push(hour_start);
            }
        }
        let stressed = stress_start == Some(hour_start);
        // Trends move slowly; evaluate once per hour at its midpoint.
        let day = (hour_start + 1800 - adm_start) as f64 / 86_400.0;
        let trend: Vec<f64> = signals
            .iter()
            .map(|s| trend_offset(profile.kind, s, day, aspiration_day))
            .collect();

        for sec in 0..SECONDS_PER_HOUR {
            let t = hour_start + sec;
            if profile.in_charging_gap(t) {
                continue;
            }
            let clock = hour_of_day + sec as f64 / 3600.0;
            let circadian = -(2.0 * PI * (clock - 3.0) / 24.0).cos();
            let in_admission = t >= adm_start && t <= adm_end;
            for (i, signal) in signals.iter().enumerate() {
                let p = &params[i];
                let mut v = p.level + trend[i] + p.circadian_amplitude * circadian;
                if stressed {
                    let s = profile.stress.unwrap();
                    v += match signal {
                        SignalId::Hr => s.hr_bump,
                        SignalId::Rr => s.rr_bump,
                        _ => 0.0,
                    };
                }
                v += rng.range_f64(-p.noise, p.noise);
                let v = (clamp_physiological(signal, v) * scales[i]).round() / scales[i];
                let quality = has_quality(signal).then(|| {
                    if dropout[h][i] {
                        rng.range_u64(0, 49) as u8
                    } else {
                        rng.range_u64(60, 100) as u8
                    }
                });
                series[i].push(Sample { t, value: v, quality });
                if in_admission {
                    let slot = &mut sums[i][h];
                    slot.0 += v;
                    slot.1 += 1;
                }
            }
        }
    }

    truth.hr_seconds = series[0].len();
    for (i, signal) in signals.iter().enumerate() {
        let means: BTreeMap<i64, f64> = sums[i]
            .iter()
            .enumerate()
            .filter(|(_, (_, n))| *n > 0)
            .map(|(h, (sum, n))| (local_hour_start_utc(first_hour + h as i64, tz), sum / f64::from(*n)))
            .collect();
        truth.hourly_means.insert(signal.clone(), means);
    }

    let mut record = PatientRecord::empty(meta);
    for (signal, samples) in signals.iter().zip(series) {
        if !samples.is_empty() {
            record.series.insert(signal.clone(), samples);
        }
    }
    Ok(GeneratedPatient {
        profile: profile.clone(),
        record,
        truth,
        annotations,
    })
}

/// Relative weights of the profile kinds in a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileMix {
    pub typical: f64,
    pub complication: f64,
    pub stress: f64,
    pub zero_data: f64,
}

impl Default for ProfileMix {
    fn default() -> Self {
        Self {
            typical: 0.60,
            complication: 0.15,
            stress: 0.19,
            zero_data: 0.06,
        }
    }
}

impl ProfileMix {
    pub fn only(kind: ProfileKind) -> Self {
        let mut m = Self { typical: 0.0, complication: 0.0, stress: 0.0, zero_data: 0.0 };
        *m.weight_mut(kind) = 1.0;
        m
    }

    fn weight(&self, kind: ProfileKind) -> f64 {
        match kind {
            ProfileKind::Typical => self.typical,
            ProfileKind::Complication => self.complication,
            ProfileKind::Stress => self.stress,
            ProfileKind::ZeroData => self.zero_data,
        }
    }

    fn weight_mut(&mut self, kind: ProfileKind) -> &mut f64 {
        match kind {
            ProfileKind::Typical => &mut self.typical,
            ProfileKind::Complication => &mut self.complication,
            ProfileKind::Stress => &mut self.stress,
            ProfileKind::ZeroData => &mut self.zero_data,
        }
    }

    /// Patients per kind: largest-remainder rounding of `n * weight`, then
    /// every positively weighted kind gets at least one patient when `n`
    /// allows, taken from the largest group.
    pub fn counts(&self, n: usize) -> Result<[usize; 4]> {
        let weights = ProfileKind::ALL.map(|k| self.weight(k));
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("profile mix weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("profile mix has no positive weight".into()));
        }
        let exact = weights.map(|w| w / total * n as f64);
        let mut counts = exact.map(|e| e.floor() as usize);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
        let mut missing = n - counts.iter().sum::<usize>();
        for &i in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            if weights[i] > 0.0 {
                counts[i] += 1;
                missing -= 1;
            }
        }
        let positive = weights.iter().filter(|w| **w > 0.0).count();
        if n >= positive {
            for i in 0..4 {
                if weights[i] > 0.0 && counts[i] == 0 {
                    let donor = (0..4).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
                    counts[donor] -= 1;
                    counts[i] += 1;
                }
            }
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub patients: usize,
    pub seed: u64,
    pub mix: ProfileMix,
    /// UTC seconds of the first admission.
    pub start: i64,
    pub tz_offset_s: i64,
    pub max_days: f64,
    pub levels: SignalLevels,
    pub dropout_rate: f64,
    /// Chance a patient keeps wearing the device after discharge.
    pub overrun_chance: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            patients: 84,
            seed: 2021,
            mix: ProfileMix::default(),
            // 2020-03-01T00:00:00Z
            start: 1_583_020_800,
            tz_offset_s: 0,
            max_days: 14.0,
            levels: SignalLevels::default(),
            dropout_rate: 0.03,
            overrun_chance: 0.1,
        }
    }
}

/// Profiles for a cohort. Cheap: nothing is generated until
/// [`generate_patient`] is called on each.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn cohort_profiles(spec: &CohortSpec) -> Result<Vec<PatientProfile>> {
    if spec.patients == 0 {
        return Err(Error::Config("a cohort needs at least one patient".into()));
    }
    if !(spec.max_days >= 7.0) {
        return Err(Error::Config("max_days must be at least 7 so every profile kind fits".into()));
    }
    let counts = spec.mix.counts(spec.patients)?;
    let mut kinds: Vec<ProfileKind> = ProfileKind::ALL
        .iter()
        .zip(counts)
        .flat_map(|(k, c)| std::iter::repeat_n(*k, c))
        .collect();
    let mut rng = Rng::new(spec.seed);
    for i in (1..kinds.len()).rev() {
        let j = rng.range_u64(0, i as u64) as usize;
        kinds.swap(i, j);
    }

    let width = spec.patients.to_string().len().max(3);
    let mut profiles = Vec::with_capacity(spec.patients);
    for (i, kind) in kinds.into_iter().enumerate() {
        let seed = patient_seed(spec.seed, i);
        let mut r = Rng::new(seed ^ 0x5EED_C0DE);
        let duration = match kind {
            ProfileKind::Typical => r.range_f64(1.0, spec.max_days),
            ProfileKind::Complication => r.range_f64(4.0, spec.max_days),
            ProfileKind::Stress => r.range_f64(6.7, spec.max_days),
            ProfileKind::ZeroData => r.range_f64(0.5, 5.0),
        };
        let admission_start = spec.start + i as i64 * 6 * 3600 + r.range_u64(0, 86_399) as i64;
        let mut p = PatientProfile::new(format!("P{:0width$}", i + 1), kind, admission_start, duration, seed);
        p.tz_offset_s = spec.tz_offset_s;
        p.levels = spec.levels.clone();
        p.dropout_rate = spec.dropout_rate;
        p.age = Some(r.range_u64(35, 90) as u32);
        p.sex = Some(if r.chance(0.5) { Sex::Female } else { Sex::Male });
        p.recording_delay_hours = r.range_u64(0, 6) as u32;
        if r.chance(spec.overrun_chance) {
            p.recording_overrun_hours = r.range_u64(12, 48) as u32;
        }
        if kind == ProfileKind::Stress {
            // Day 5 when it fits, otherwise the nearest day that does.
            let default = StressEvent::default();
            let day = (0..=spec.max_days as u32)
                .filter(|&d| {
                    p.stress = Some(StressEvent { day: d, ..default });
                    p.validate().is_ok()
                })
                .min_by_key(|&d| (d.abs_diff(default.day), d));
            let Some(day) = day else {
                return Err(Error::Config(format!("{}: no day fits a stress hour", p.patient_id)));
            };
            p.stress = Some(StressEvent { day, ..default });
        }
        p.validate()?;
        profiles.push(p);
    }
    Ok(profiles)
}

/// Generate a whole cohort in memory. Prefer streaming
/// [`cohort_profiles`] through [`generate_patient`] for large cohorts.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<GeneratedPatient>> {
    cohort_profiles(spec)?.iter().map(generate_patient).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of SplitMix64 seeded with 0.
        let mut s = 0u64;
        assert_eq!(splitmix64(&mut s), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(&mut s), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(patient_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn unit_draws_stay_in_range() {
        let mut r = Rng::new(1);
        for _ in 0..10_000 {
            let u = r.unit();
            assert!((0.0..1.0).contains(&u));
            let k = r.range_u64(60, 100);
            assert!((60..=100).contains(&k));
        }
    }

    #[test]
    fn mix_counts_for_default_cohort() {
        let counts = ProfileMix::default().counts(84).unwrap();
        assert_eq!(counts.iter().sum::<usize>(), 84);
        assert!(counts.iter().all(|&c| c >= 1));
        assert_eq!(ProfileMix::only(ProfileKind::Typical).counts(10).unwrap(), [10, 0, 0, 0]);
        // Floor rule: a tiny weight still yields one patient.
        let m = ProfileMix { typical: 1.0, complication: 0.0, stress: 0.0, zero_data: 0.001 };
        assert_eq!(m.counts(5).unwrap(), [4, 0, 0, 1]);
    }

    #[test]
    fn typical_hr_trend_turns_after_week_one() {
        let slope = |a: f64, b: f64| {
            (trend_offset(ProfileKind::Typical, &SignalId::Hr, b, None)
                - trend_offset(ProfileKind::Typical, &SignalId::Hr, a, None))
                / (b - a)
        };
        assert!(slope(0.0, 7.0) < 0.0);
        assert!(slope(7.0, 14.0) > 0.0);
    }

    #[test]
    fn charging_gap_membership() {
        let p = PatientProfile::new("P", ProfileKind::Typical, 0, 2.0, 1);
        assert!(p.in_charging_gap(7 * 3600));
        assert!(p.in_charging_gap(8 * 3600 - 1));
        assert!(!p.in_charging_gap(8 * 3600));
        assert!(!p.in_charging_gap(7 * 3600 - 1));
    }

    #[test]
    fn stress_outside_admission_is_rejected() {
        let mut p = PatientProfile::new("P", ProfileKind::Stress, 0, 2.0, 1);
        p.stress = Some(StressEvent::default());
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        assert!(generate_patient(&p).is_err());
    }

    #[test]
    fn zero_data_patient_is_empty() {
        let p = PatientProfile::new("Z", ProfileKind::ZeroData, 0, 2.0, 1);
        let g = generate_patient(&p).unwrap();
        assert!(g.record.is_empty());
        assert_eq!(g.truth.hr_seconds, 0);
    }

    #[test]
    fn recording_window_is_hour_aligned() {
        let mut p = PatientProfile::new("P", ProfileKind::Typical, 1000, 1.0, 1);
        p.recording_delay_hours = 2;
        let (s, e) = p.recording_window();
        assert_eq!(s, 3 * 3600);
        assert_eq!(e, 86_400);
        assert_eq!(s % 3600, 0);
    }
}
