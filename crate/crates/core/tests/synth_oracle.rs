//! The generator records what it emitted; the pipeline must recover it.

mod common;

use common::T0;
use vitalband::aggregate::{hourly_mean, local_hour};
use vitalband::config::Config;
use vitalband::pipeline::{process_patient, ChartSelection};
use vitalband::quality::{apply_cascade, FilterConfig};
use vitalband::synth::{cohort_profiles, generate_patient, CohortSpec, PatientProfile, ProfileKind, ProfileMix};
use vitalband::SignalId;

fn profile(kind: ProfileKind, days: f64, seed: u64) -> PatientProfile {
    PatientProfile::new("X", kind, T0 + 3 * 3600 + 17, days, seed)
}

#[test]
fn clean_hours_reproduce_the_emitted_means() {
    for (kind, seed) in [(ProfileKind::Typical, 1), (ProfileKind::Stress, 2), (ProfileKind::Complication, 3)] {
        let mut p = profile(kind, 8.0, seed);
        p.tz_offset_s = 3600;
        let g = generate_patient(&p).unwrap();
        let filtered = apply_cascade(g.record.clone(), &FilterConfig::default());
        let grid = hourly_mean(&filtered, p.tz_offset_s);
        let mut checked = 0;
        for (signal, hours) in &g.truth.hourly_means {
            let series = grid.get(signal).unwrap();
            for (&start, &want) in hours {
                if !g.truth.is_clean(signal, start) {
                    continue;
                }
                let i = grid.hour_index(start).unwrap();
                let got = series.values[i].unwrap_or_else(|| panic!("{kind:?} {signal} hour {start} missing"));
                assert!((got - want).abs() <= 1e-6, "{kind:?} {signal} at {start}: {got} vs {want}");
                checked += 1;
            }
        }
        assert!(checked > 5 * 24 * 4, "{kind:?}: only {checked} clean hours");

        for &gap in &g.truth.gap_hours {
            let i = grid.hour_index(gap).unwrap();
            for series in grid.series.values() {
                assert_eq!(series.values[i], None, "charging hour {gap} has data");
            }
            assert_eq!(local_hour(gap, p.tz_offset_s).rem_euclid(24), 7);
        }
        assert!(g.truth.gap_hours.len() >= 7);
    }
}

#[test]
fn dropout_hours_lose_their_low_quality_samples() {
    let mut p = profile(ProfileKind::Typical, 10.0, 44);
    p.dropout_rate = 0.2;
    let g = generate_patient(&p).unwrap();
    let mut saw = 0;
    for (signal, hours) in &g.truth.dropout_hours {
        for &h in hours {
            let raw = g.record.signal(signal).iter().filter(|s| s.t >= h && s.t < h + 3600);
            let low = raw.filter(|s| s.quality.is_some_and(|q| q < 50)).count();
            assert!(low > 0, "{signal} dropout hour {h} has no low-quality samples");
            saw += 1;
        }
    }
    assert!(saw > 50);
    let filtered = apply_cascade(g.record, &FilterConfig::default());
    for samples in filtered.series.values() {
        assert!(samples.iter().all(|s| s.quality.is_none_or(|q| q >= 50)));
    }
}

#[test]
fn stress_hour_is_a_clear_hr_and_rr_peak() {
    let g = generate_patient(&profile(ProfileKind::Stress, 9.0, 7)).unwrap();
    let event = g.truth.event("stress").expect("stress event");
    assert_eq!(event.end - event.start, 3600);
    let done = process_patient(g.record, &g.annotations, &Config::default(), ChartSelection::NONE).unwrap();
    let i = done.grid.hour_index(event.start).unwrap();
    for sig in [SignalId::Hr, SignalId::Rr] {
        let v = &done.grid.get(&sig).unwrap().values;
        let peak = v[i].unwrap();
        let others = v.iter().enumerate().filter(|(j, _)| *j != i).filter_map(|(_, x)| *x);
        assert!(others.into_iter().all(|x| x < peak), "{sig} stress hour is not the maximum");
    }
}

#[test]
fn typical_heart_rate_settles_over_the_first_week() {
    let g = generate_patient(&profile(ProfileKind::Typical, 10.0, 9)).unwrap();
    let hr = &g.truth.hourly_means[&SignalId::Hr];
    let day_mean = |d: i64| {
        let lo = T0 + d * 86_400;
        let v: Vec<f64> = hr.range(lo..lo + 86_400).map(|(_, v)| *v).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    // Daily means average out the circadian swing; the trend drops about
    // 4 bpm per week.
    let (d1, d6) = (day_mean(1), day_mean(6));
    assert!(d1 - d6 > 2.0 && d1 - d6 < 6.0, "day 1 {d1}, day 6 {d6}");
}

#[test]
fn zero_data_patients_emit_nothing() {
    let g = generate_patient(&profile(ProfileKind::ZeroData, 4.0, 5)).unwrap();
    assert!(g.record.is_empty());
    assert_eq!(g.truth.hr_seconds, 0);
    let done = process_patient(g.record, &[], &Config::default(), ChartSelection::BOTH).unwrap();
    assert_eq!(done.days.recorded_days, 0.0);
    assert_eq!(done.days.useful_days, 0.0);
    assert!(done.grid.hours >= 4 * 24);
    assert!(done.heatmap.is_some() && done.bars.is_some());
}

#[test]
fn generation_is_seeded() {
    let a = generate_patient(&profile(ProfileKind::Typical, 7.0, 123)).unwrap();
    let b = generate_patient(&profile(ProfileKind::Typical, 7.0, 123)).unwrap();
    let c = generate_patient(&profile(ProfileKind::Typical, 7.0, 124)).unwrap();
    assert_eq!(a.record, b.record);
    assert_eq!(a.truth, b.truth);
    assert_ne!(a.record, c.record);
}

#[test]
fn cohort_mix_and_ids() {
    let spec = CohortSpec::default();
    let profiles = cohort_profiles(&spec).unwrap();
    assert_eq!(profiles.len(), 84);
    let count = |k| profiles.iter().filter(|p| p.kind == k).count();
    assert_eq!(count(ProfileKind::ZeroData), 5);
    assert_eq!(count(ProfileKind::Typical) + count(ProfileKind::Complication) + count(ProfileKind::Stress) + 5, 84);
    assert_eq!(profiles[0].patient_id, "P001");
    assert_eq!(profiles[83].patient_id, "P084");
    assert!(profiles.iter().all(|p| p.duration_days <= spec.max_days));
    assert_eq!(cohort_profiles(&spec).unwrap(), profiles);

    let only = CohortSpec { patients: 3, mix: ProfileMix::only(ProfileKind::Stress), ..CohortSpec::default() };
    assert!(cohort_profiles(&only).unwrap().iter().all(|p| p.kind == ProfileKind::Stress && p.stress.is_some()));
}
