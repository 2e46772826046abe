use std::ffi::{c_char, CStr, CString};
use std::ptr;

use vitalband_ffi::*;

const START: i64 = 1_583_020_800; // midnight UTC

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = vb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    vb_string_free(p);
    s
}

/// Three hours of HR and RR. Hour 1 has a low-quality block.
unsafe fn sample_record() -> *mut VbRecord {
    let mut rec = ptr::null_mut();
    assert_eq!(vb_record_new(c("P1").as_ptr(), START, START + 3 * 3600 - 1, &mut rec), VbStatus::Ok);
    let (hr, rr) = (c("HR"), c("RR"));
    for t in 0..3 * 3600 {
        let hour = t / 3600;
        let q = if hour == 1 && t % 3600 < 600 { 10 } else { 90 };
        let v = 60.0 + hour as f64 * 10.0 + (t % 2) as f64;
        assert_eq!(vb_record_push(rec, hr.as_ptr(), START + t, v, q), VbStatus::Ok);
        assert_eq!(vb_record_push(rec, rr.as_ptr(), START + t, 15.0, q), VbStatus::Ok);
    }
    rec
}

#[test]
fn filter_aggregate_and_query() {
    unsafe {
        let rec = sample_record();
        let mut n = 0usize;
        assert_eq!(vb_record_sample_count(rec, &mut n), VbStatus::Ok);
        assert_eq!(n, 2 * 3 * 3600);

        let mut filtered = ptr::null_mut();
        assert_eq!(vb_record_filter(rec, 50, &mut filtered), VbStatus::Ok);
        assert_eq!(vb_record_sample_count(filtered, &mut n), VbStatus::Ok);
        assert_eq!(n, 2 * (3 * 3600 - 600));

        let mut grid = ptr::null_mut();
        assert_eq!(vb_record_aggregate(filtered, 0, &mut grid), VbStatus::Ok);
        let mut hours = 0usize;
        assert_eq!(vb_grid_hours(grid, &mut hours), VbStatus::Ok);
        assert_eq!(hours, 3);
        let mut start = 0i64;
        assert_eq!(vb_grid_start(grid, &mut start), VbStatus::Ok);
        assert_eq!(start, START);

        // Alternating +0/+1 over an even count averages to +0.5.
        let mut v = 0.0;
        for (h, want) in [(0usize, 60.5), (1, 70.5), (2, 80.5)] {
            assert_eq!(vb_grid_value(grid, c("HR").as_ptr(), h, &mut v), VbStatus::Ok);
            assert!((v - want).abs() < 1e-12, "hour {h}: {v}");
        }
        assert_eq!(vb_grid_value(grid, c("SPO2").as_ptr(), 0, &mut v), VbStatus::Ok);
        assert!(v.is_nan());
        assert_eq!(vb_grid_value(grid, c("HR").as_ptr(), 3, &mut v), VbStatus::OutOfBounds);

        let (mut lo, mut base, mut hi) = (0.0, 0.0, 0.0);
        assert_eq!(vb_grid_range(grid, c("HR").as_ptr(), &mut lo, &mut base, &mut hi), VbStatus::Ok);
        assert_eq!((lo, hi), (60.5, 80.5));
        assert!((base - 70.5).abs() < 1e-12);
        assert_eq!(vb_grid_range(grid, c("SPO2").as_ptr(), &mut lo, &mut base, &mut hi), VbStatus::Range);

        let mut out = ptr::null_mut();
        assert_eq!(vb_grid_render_svg(grid, c("P1").as_ptr(), VbChart::Heatmap, &mut out), VbStatus::Ok);
        let svg = take_string(out);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches(r#"class="cell""#).count(), 5 * 3);

        assert_eq!(vb_grid_render_svg(grid, c("P1").as_ptr(), VbChart::Bars, &mut out), VbStatus::Ok);
        assert!(take_string(out).contains("bar up"));

        assert_eq!(vb_grid_to_csv(grid, &mut out), VbStatus::Ok);
        let csv = take_string(out);
        assert!(csv.starts_with("hour_start,signal,mean,count\n"));
        assert!(csv.contains(",SPO2,NAN,0"));

        vb_grid_free(grid);
        vb_record_free(filtered);
        vb_record_free(rec);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut rec = ptr::null_mut();
        assert_eq!(vb_record_new(ptr::null(), 0, 10, &mut rec), VbStatus::NullPointer);
        assert!(last_error().contains("patient_id"));
        assert_eq!(vb_record_new(c("P").as_ptr(), 10, 0, &mut rec), VbStatus::Format);

        assert_eq!(vb_record_new(c("P").as_ptr(), 0, 10, &mut rec), VbStatus::Ok);
        assert_eq!(vb_record_push(rec, c("HR").as_ptr(), 0, 70.0, 101), VbStatus::InvalidArgument);
        assert_eq!(vb_record_push(rec, c("HR").as_ptr(), 0, f64::NAN, 50), VbStatus::InvalidArgument);
        assert_eq!(vb_record_push(rec, c("HR").as_ptr(), 0, 70.0, -1), VbStatus::Ok);

        let mut filtered = ptr::null_mut();
        assert_eq!(vb_record_filter(rec, 101, &mut filtered), VbStatus::Config);
        assert!(last_error().contains("101"));
        assert!(filtered.is_null());

        // A successful call clears the message.
        assert_eq!(vb_record_filter(rec, 0, &mut filtered), VbStatus::Ok);
        assert!(vb_last_error_message().is_null());

        let mut other = ptr::null_mut();
        let status = vb_record_load_csv(c("P").as_ptr(), 0, 10, c("/nonexistent/x.csv").as_ptr(), &mut other);
        assert_eq!(status, VbStatus::Io);
        assert!(last_error().contains("/nonexistent/x.csv"));

        vb_record_free(filtered);
        vb_record_free(rec);
        vb_record_free(ptr::null_mut());
        vb_grid_free(ptr::null_mut());
        vb_string_free(ptr::null_mut());
    }
}

#[test]
fn load_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, "timestamp,signal,value,quality\n0,HR,70,80\n1,HR,72,80\n1,SPO2,97,\n").unwrap();
    unsafe {
        let mut rec = ptr::null_mut();
        let p = c(path.to_str().unwrap());
        assert_eq!(vb_record_load_csv(c("P").as_ptr(), 0, 3600, p.as_ptr(), &mut rec), VbStatus::Ok);
        let mut n = 0;
        assert_eq!(vb_record_sample_count(rec, &mut n), VbStatus::Ok);
        assert_eq!(n, 3);
        vb_record_free(rec);
    }
}

#[test]
fn all_missing_record_still_renders() {
    unsafe {
        let mut rec = ptr::null_mut();
        assert_eq!(vb_record_new(c("E").as_ptr(), START, START + 5 * 3600 - 1, &mut rec), VbStatus::Ok);
        let mut grid = ptr::null_mut();
        assert_eq!(vb_record_aggregate(rec, 0, &mut grid), VbStatus::Ok);
        let mut hours = 0;
        assert_eq!(vb_grid_hours(grid, &mut hours), VbStatus::Ok);
        assert_eq!(hours, 5);
        let mut out = ptr::null_mut();
        assert_eq!(vb_grid_render_svg(grid, c("E").as_ptr(), VbChart::Heatmap, &mut out), VbStatus::Ok);
        let svg = take_string(out);
        assert_eq!(svg.matches("#BDBDBD").count(), svg.matches(r#"class="cell""#).count());
        vb_grid_free(grid);
        vb_record_free(rec);
    }
}

#[test]
fn tick_strides() {
    let got: Vec<u32> = [1.0, 23.0, 24.0, 120.0, 143.0, 144.0, 239.0, 240.0, 600.0]
        .into_iter()
        .map(|h| vb_tick_stride(h))
        .collect();
    assert_eq!(got, [1, 1, 6, 6, 6, 12, 12, 24, 24]);
}

#[test]
fn color_lookup() {
    let mut rgb = 0u32;
    unsafe {
        for (pos, want) in [(0.0, 0x0571B0), (0.5, 0x1A9641), (0.75, 0xFDAE61), (1.0, 0xCA0020), (f64::NAN, 0xBDBDBD)] {
            assert_eq!(vb_color_at(c("RYGB").as_ptr(), false, pos, &mut rgb), VbStatus::Ok);
            assert_eq!(rgb, want, "position {pos}");
        }
        assert_eq!(vb_color_at(c("GB_SEQ").as_ptr(), true, 1.0, &mut rgb), VbStatus::Ok);
        assert_eq!(rgb, 0x1A9641);
        assert_eq!(vb_color_at(c("nope").as_ptr(), false, 0.5, &mut rgb), VbStatus::Config);
    }
}
