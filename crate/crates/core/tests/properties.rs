mod common;

use proptest::prelude::*;

use common::*;
use vitalband::aggregate::{annotate_grid, hourly_mean, moving_average, RangeConfig};
use vitalband::colorscale::{make_named_scale, normalize, ScaleKind, ScaleMode, SchemeName};
use vitalband::ingest::{build_record, parse_samples_csv, SampleFormat};
use vitalband::quality::{apply_cascade, FilterConfig};
use vitalband::render::{plan_ticks, tick_stride, DateMode, TickRule};
use vitalband::synth::Rng;
use vitalband::{SignalId, VitalSample};

fn signal() -> impl Strategy<Value = SignalId> {
    prop_oneof![
        Just(SignalId::Hr),
        Just(SignalId::Hrv),
        Just(SignalId::Rr),
        Just(SignalId::Spo2),
        Just(SignalId::Temp),
        "[A-Z]{2,5}".prop_map(|s| s.parse().unwrap()),
    ]
}

fn vital_sample() -> impl Strategy<Value = VitalSample> {
    (
        T0..T0 + 20_000,
        signal(),
        -1.0e6f64..1.0e6,
        proptest::option::of(0u8..=100),
    )
        .prop_map(|(timestamp, signal, value, quality)| VitalSample { timestamp, signal, value, quality })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_preserves_the_record(samples in prop::collection::vec(vital_sample(), 0..300)) {
        let record = build_record(meta("P", T0, T0 + 20_000), samples).record;
        let mut buf = Vec::new();
        record.write_csv(&mut buf).unwrap();
        let parsed = parse_samples_csv(buf.as_slice(), SampleFormat::Long).unwrap();
        prop_assert!(parsed.diagnostics.is_empty());
        let again = build_record(record.meta.clone(), parsed.samples);
        prop_assert!(again.diagnostics.is_empty());
        prop_assert_eq!(again.record, record);
    }

    #[test]
    fn building_a_built_record_changes_nothing(samples in prop::collection::vec(vital_sample(), 0..300)) {
        let once = build_record(meta("P", T0, T0 + 20_000), samples).record;
        let twice = build_record(once.meta.clone(), once.to_samples());
        prop_assert!(twice.diagnostics.is_empty());
        prop_assert_eq!(twice.record, once);
    }

    #[test]
    fn cascade_invariants(seed in any::<u64>(), threshold in 0u8..=100) {
        let mut rng = Rng::new(seed);
        let record = random_record(&mut rng, "P", 3000);
        let cfg = FilterConfig { quality_threshold: threshold, ..FilterConfig::default() };
        let (start, end) = (record.meta.admission_start, record.meta.admission_end);
        let out = apply_cascade(record.clone(), &cfg);
        let hr: std::collections::BTreeSet<i64> = out.signal(&SignalId::Hr).iter().map(|s| s.t).collect();
        for (sig, samples) in &out.series {
            for s in samples {
                prop_assert!(s.quality.is_none_or(|q| q >= threshold));
                prop_assert!(s.t >= start && s.t <= end);
                if *sig != SignalId::Hr {
                    prop_assert!(hr.contains(&s.t), "{sig} at {} without HR", s.t);
                }
                // Every survivor was in the input.
                prop_assert!(record.signal(sig).binary_search_by_key(&s.t, |x| x.t).is_ok());
            }
        }
        prop_assert_eq!(apply_cascade(out.clone(), &cfg), out);
    }

    #[test]
    fn hourly_mean_matches_brute_force(seed in any::<u64>(), n in 1usize..20_000, tz_quarters in -48i64..=56) {
        let mut rng = Rng::new(seed);
        let series = random_series(&mut rng, n);
        let tz = tz_quarters * 900;
        let grid = hourly_mean(&record_from(SignalId::Hr, &series), tz);
        let oracle = oracle_hourly(&series, tz);
        let hr = grid.get(&SignalId::Hr).unwrap();
        let present: usize = hr.values.iter().flatten().count();
        prop_assert_eq!(present, oracle.len());
        for (hour, want) in &oracle {
            let i = (hour - grid.first_local_hour) as usize;
            let got = hr.values[i].unwrap();
            prop_assert!(rel_close(got, *want, 1e-9), "hour {}: {} vs {}", hour, got, want);
        }
        prop_assert_eq!(hr.counts.iter().map(|&c| c as usize).sum::<usize>(), series.len());
    }

    #[test]
    fn hourly_mean_ignores_input_order(seed in any::<u64>(), n in 1usize..3000) {
        let mut rng = Rng::new(seed);
        let series = random_series(&mut rng, n);
        let mut shuffled = series.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.range_u64(0, i as u64) as usize;
            shuffled.swap(i, j);
        }
        let a = hourly_mean(&record_from(SignalId::Rr, &series), 0);
        let b = hourly_mean(&record_from(SignalId::Rr, &shuffled), 0);
        prop_assert_eq!(a.hours, b.hours);
        let (va, vb) = (&a.get(&SignalId::Rr).unwrap().values, &b.get(&SignalId::Rr).unwrap().values);
        for (x, y) in va.iter().zip(vb) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!(rel_close(*x, *y, 1e-12)),
                (None, None) => {}
                _ => prop_assert!(false, "presence differs"),
            }
        }
    }

    #[test]
    fn baseline_range_and_moving_average_match_brute_force(
        values in prop::collection::vec(proptest::option::of(-1.0e4f64..1.0e4), 1..400),
        window in 1usize..12,
    ) {
        let series: Vec<(i64, f64)> = values
            .iter()
            .enumerate()
            .filter_map(|(h, v)| v.map(|v| (T0 + h as i64 * 3600, v)))
            .collect();
        prop_assume!(!series.is_empty());
        let mut grid = hourly_mean(&record_from(SignalId::Hr, &series), 0);
        annotate_grid(&mut grid, &RangeConfig::default());
        let hr = grid.get(&SignalId::Hr).unwrap();
        let (lo, base, hi) = oracle_range(&hr.values).unwrap();
        let r = hr.range.unwrap();
        prop_assert_eq!((r.vmin, r.vmax), (lo, hi));
        prop_assert!(rel_close(r.baseline, base, 1e-9));
        prop_assert!(r.vmin <= r.baseline && r.baseline <= r.vmax);

        let ma = moving_average(&hr.values, window).unwrap();
        for (got, want) in ma.iter().zip(oracle_moving_average(&hr.values, window)) {
            match (got, want) {
                (Some(g), Some(w)) => prop_assert!(rel_close(*g, w, 1e-9)),
                (None, None) => {}
                _ => prop_assert!(false, "moving-average presence differs"),
            }
        }
    }

    #[test]
    fn inverted_scale_mirrors_positions(p in 0.0f64..=1.0, idx in 0usize..8, steps in prop::sample::select(vec![3u8, 5, 7, 9])) {
        let name = SchemeName::ALL[idx];
        for mode in [ScaleMode::Continuous, ScaleMode::discrete(steps).unwrap()] {
            let plain = make_named_scale(name, mode, false).unwrap();
            let inverted = make_named_scale(name, mode, true).unwrap();
            // Bin edges are where discrete lookups may legitimately differ.
            let near_edge = matches!(mode, ScaleMode::Discrete(_))
                && ((p * f64::from(steps)).fract() < 1e-9 || (p * f64::from(steps)).fract() > 1.0 - 1e-9);
            if !near_edge {
                prop_assert_eq!(inverted.map_color(Some(p)), plain.map_color(Some(1.0 - p)));
            }
        }
    }

    #[test]
    fn normalize_is_monotone_and_bounded(
        a in -1.0e3f64..1.0e3, b in -1.0e3f64..1.0e3, c in -1.0e3f64..1.0e3,
        x in -2.0e3f64..2.0e3, y in -2.0e3f64..2.0e3,
    ) {
        let mut v = [a, b, c];
        v.sort_by(f64::total_cmp);
        let [vmin, baseline, vmax] = v;
        prop_assume!(vmin < vmax);
        for kind in [ScaleKind::Diverging, ScaleKind::Sequential] {
            let (px, py) = (normalize(x, vmin, vmax, baseline, kind).unwrap(), normalize(y, vmin, vmax, baseline, kind).unwrap());
            prop_assert!((0.0..=1.0).contains(&px));
            if x <= y {
                prop_assert!(px <= py);
            }
        }
        prop_assert_eq!(normalize(baseline, vmin, vmax, baseline, ScaleKind::Diverging).unwrap(), 0.5);
    }

    #[test]
    fn ticks_use_allowed_strides_and_align_to_the_clock(first in -100_000i64..100_000, hours in 0usize..2000) {
        let rule = TickRule::default();
        let plan = plan_ticks(first, hours, DateMode::Anonymized, &rule);
        prop_assert!([1, 6, 12, 24].contains(&plan.stride));
        prop_assert_eq!(plan.stride, tick_stride(hours as f64));
        for t in &plan.minor {
            prop_assert_eq!((first + t.hour as i64).rem_euclid(i64::from(plan.stride)), 0);
        }
        // Day labels sit on midnights, plus one at the left edge of the axis.
        for t in plan.major.iter().filter(|t| t.hour > 0) {
            prop_assert_eq!((first + t.hour as i64).rem_euclid(24), 0);
        }
        if hours > 0 {
            prop_assert_eq!(plan.major.first().map(|t| t.hour), Some(0));
        }
    }
}

#[test]
fn discrete_scales_give_distinct_bin_colors() {
    // RGR is symmetric (red at both ends), so its bins pair up by design.
    for name in SchemeName::ALL.into_iter().filter(|n| *n != SchemeName::RedGreenRed) {
        for steps in [3u8, 5, 7, 9] {
            let scale = make_named_scale(name, ScaleMode::discrete(steps).unwrap(), false).unwrap();
            let bins = scale.bins().unwrap();
            assert_eq!(bins.len(), usize::from(steps));
            let distinct: std::collections::BTreeSet<String> = bins.iter().map(|c| c.to_string()).collect();
            assert_eq!(distinct.len(), bins.len(), "{name} with {steps} steps");
            // Every position maps to one of the bins.
            for i in 0..=1000 {
                let c = scale.map_color(Some(f64::from(i) / 1000.0));
                assert!(bins.contains(&c));
            }
        }
    }
}
