//! C ABI over the vitalband pipeline.
//!
//! Records and hour grids are opaque heap handles owned by the caller and
//! released with their `_free` function. Every fallible function returns a
//! [`VbStatus`]; on failure [`vb_last_error_message`] describes the error
//! on the calling thread. Strings returned through `out` parameters are
//! NUL-terminated UTF-8 and must be released with [`vb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vitalband::aggregate::{annotate_grid, hourly_mean, HourlyGrid, RangeConfig};
use vitalband::colorscale::{make_named_scale, ScaleMode, SchemeName};
use vitalband::config::Config;
use vitalband::ingest::{build_record, parse_samples_csv, PatientMeta, PatientRecord, SampleFormat};
use vitalband::quality::{apply_cascade, FilterConfig};
use vitalband::render::{render_barchart, render_heatmap, tick_stride};
use vitalband::{Error, SignalId, VitalSample};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Config = 5,
    Range = 6,
    Precondition = 7,
    OutOfBounds = 8,
    Panic = 99,
}

/// Chart selector for [`vb_grid_render_svg`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbChart {
    Heatmap = 0,
    Bars = 1,
}

/// A patient's raw or filtered samples.
pub struct VbRecord {
    meta: PatientMeta,
    pending: Vec<VitalSample>,
    record: Option<PatientRecord>,
}

impl VbRecord {
    fn from_record(record: PatientRecord) -> Self {
        Self {
            meta: record.meta.clone(),
            pending: Vec::new(),
            record: Some(record),
        }
    }

    /// Fold pushed samples into the sorted record.
    fn settle(&mut self) -> &PatientRecord {
        if !self.pending.is_empty() || self.record.is_none() {
            let mut samples = self.record.take().map(|r| r.to_samples()).unwrap_or_default();
            samples.append(&mut self.pending);
            let built = build_record(self.meta.clone(), samples);
            self.record = Some(built.record);
        }
        self.record.as_ref().expect("settled above")
    }
}

/// Hourly means with baselines and ranges.
pub struct VbGrid {
    grid: HourlyGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: VbStatus, msg: impl Into<String>) -> VbStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> VbStatus {
    match e {
        Error::Io { .. } | Error::Stream(_) => VbStatus::Io,
        Error::Format(_) | Error::Json(_) => VbStatus::Format,
        Error::Config(_) => VbStatus::Config,
        Error::UndefinedRange(_) | Error::Range { .. } => VbStatus::Range,
        Error::Precondition(_) => VbStatus::Precondition,
    }
}

fn from_error(e: Error) -> VbStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

/// Run `body`, turning panics into [`VbStatus::Panic`].
fn guard(body: impl FnOnce() -> VbStatus) -> VbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(VbStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, VbStatus> {
    if p.is_null() {
        return Err(fail(VbStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(VbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn give_string(s: String, out: *mut *mut c_char) -> VbStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            VbStatus::Ok
        }
        Err(_) => fail(VbStatus::Format, "output contains a NUL byte"),
    }
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(VbStatus::NullPointer, concat!(stringify!($p), " is NULL"));
        })+
    };
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn vb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New empty record for an admission `[admission_start, admission_end]`
/// in UTC seconds.
///
/// # Safety
/// `patient_id` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_record_new(
    patient_id: *const c_char,
    admission_start: i64,
    admission_end: i64,
    out: *mut *mut VbRecord,
) -> VbStatus {
    guard(|| {
        non_null!(out);
        let id = try_ffi!(str_arg(patient_id, "patient_id"));
        let meta = try_ffi!(PatientMeta::new(id, admission_start, admission_end).map_err(from_error));
        let record = VbRecord::from_record(PatientRecord::empty(meta));
        *out = Box::into_raw(Box::new(record));
        VbStatus::Ok
    })
}

/// Append one sample. `quality` outside 0..=100 means "no quality"
/// when negative and is rejected when above 100.
///
/// # Safety
/// `record` must be a live handle; `signal` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vb_record_push(
    record: *mut VbRecord,
    signal: *const c_char,
    timestamp: i64,
    value: f64,
    quality: i32,
) -> VbStatus {
    guard(|| {
        non_null!(record);
        let name = try_ffi!(str_arg(signal, "signal"));
        if !value.is_finite() {
            return fail(VbStatus::InvalidArgument, "value must be finite");
        }
        let quality = match quality {
            q if q < 0 => None,
            q @ 0..=100 => Some(q as u8),
            q => return fail(VbStatus::InvalidArgument, format!("quality {q} above 100")),
        };
        (*record).pending.push(VitalSample {
            timestamp,
            signal: name.parse().unwrap_or_else(|_| SignalId::Other(name.to_string())),
            value,
            quality,
        });
        VbStatus::Ok
    })
}

/// Load samples from a long-format CSV file
/// (`timestamp,signal,value,quality`) into a new record.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_record_load_csv(
    patient_id: *const c_char,
    admission_start: i64,
    admission_end: i64,
    path: *const c_char,
    out: *mut *mut VbRecord,
) -> VbStatus {
    guard(|| {
        non_null!(out);
        let id = try_ffi!(str_arg(patient_id, "patient_id"));
        let path = try_ffi!(str_arg(path, "path"));
        let meta = try_ffi!(PatientMeta::new(id, admission_start, admission_end).map_err(from_error));
        let file = try_ffi!(File::open(path).map_err(|e| from_error(Error::io(path, e))));
        let parsed = try_ffi!(parse_samples_csv(BufReader::new(file), SampleFormat::Long).map_err(from_error));
        let built = build_record(meta, parsed.samples);
        *out = Box::into_raw(Box::new(VbRecord::from_record(built.record)));
        VbStatus::Ok
    })
}

/// Number of samples across all signals.
///
/// # Safety
/// `record` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_record_sample_count(record: *mut VbRecord, out: *mut usize) -> VbStatus {
    guard(|| {
        non_null!(record, out);
        *out = (*record).settle().sample_count();
        VbStatus::Ok
    })
}

/// Apply the cleansing cascade (admission crop, quality threshold,
/// heart-rate presence) into a new record. The input is left untouched.
///
/// # Safety
/// `record` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_record_filter(record: *mut VbRecord, quality_threshold: i32, out: *mut *mut VbRecord) -> VbStatus {
    guard(|| {
        non_null!(record, out);
        let cfg = try_ffi!(FilterConfig::with_threshold(i64::from(quality_threshold)).map_err(from_error));
        let filtered = apply_cascade((*record).settle().clone(), &cfg);
        *out = Box::into_raw(Box::new(VbRecord::from_record(filtered)));
        VbStatus::Ok
    })
}

/// Hourly means in local time (`tz_offset_s` seconds east of UTC) with
/// data-derived baselines and ranges.
///
/// # Safety
/// `record` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_record_aggregate(record: *mut VbRecord, tz_offset_s: i64, out: *mut *mut VbGrid) -> VbStatus {
    guard(|| {
        non_null!(record, out);
        let rec = (*record).settle();
        let mut grid = hourly_mean(rec, tz_offset_s);
        if grid.is_empty() {
            grid = HourlyGrid::all_missing_over(rec.meta.admission_start, rec.meta.admission_end, tz_offset_s);
        }
        annotate_grid(&mut grid, &RangeConfig::default());
        *out = Box::into_raw(Box::new(VbGrid { grid }));
        VbStatus::Ok
    })
}

/// # Safety
/// `record` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vb_record_free(record: *mut VbRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Number of hours the grid spans.
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_grid_hours(grid: *const VbGrid, out: *mut usize) -> VbStatus {
    guard(|| {
        non_null!(grid, out);
        *out = (*grid).grid.hours;
        VbStatus::Ok
    })
}

/// UTC second at which the grid's first hour starts.
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_grid_start(grid: *const VbGrid, out: *mut i64) -> VbStatus {
    guard(|| {
        non_null!(grid, out);
        *out = (*grid).grid.start_utc();
        VbStatus::Ok
    })
}

/// Hourly mean of `signal` at `hour`, NaN for a missing hour.
///
/// # Safety
/// `grid` must be a live handle; `signal` a NUL-terminated string; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_grid_value(grid: *const VbGrid, signal: *const c_char, hour: usize, out: *mut f64) -> VbStatus {
    guard(|| {
        non_null!(grid, out);
        let name = try_ffi!(str_arg(signal, "signal"));
        let id: SignalId = name.parse().unwrap_or_else(|_| SignalId::Other(name.to_string()));
        let Some(series) = (*grid).grid.get(&id) else {
            return fail(VbStatus::InvalidArgument, format!("no series for signal {name}"));
        };
        let Some(v) = series.values.get(hour) else {
            return fail(VbStatus::OutOfBounds, format!("hour {hour} outside 0..{}", series.values.len()));
        };
        *out = v.unwrap_or(f64::NAN);
        VbStatus::Ok
    })
}

/// Baseline, minimum and maximum of `signal`. Fails with
/// [`VbStatus::Range`] when the signal has no present hours.
///
/// # Safety
/// `grid` must be a live handle; `signal` a NUL-terminated string; the
/// three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_grid_range(
    grid: *const VbGrid,
    signal: *const c_char,
    vmin: *mut f64,
    baseline: *mut f64,
    vmax: *mut f64,
) -> VbStatus {
    guard(|| {
        non_null!(grid, vmin, baseline, vmax);
        let name = try_ffi!(str_arg(signal, "signal"));
        let id: SignalId = name.parse().unwrap_or_else(|_| SignalId::Other(name.to_string()));
        let Some(series) = (*grid).grid.get(&id) else {
            return fail(VbStatus::InvalidArgument, format!("no series for signal {name}"));
        };
        let Some(r) = series.range else {
            return fail(VbStatus::Range, format!("signal {name} has no defined range"));
        };
        *vmin = r.vmin;
        *baseline = r.baseline;
        *vmax = r.vmax;
        VbStatus::Ok
    })
}

/// Render the grid as SVG with the default layout and color scales.
///
/// # Safety
/// `grid` must be a live handle; `title` a NUL-terminated string; `out`
/// must be writable. Free the result with [`vb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn vb_grid_render_svg(
    grid: *const VbGrid,
    title: *const c_char,
    chart: VbChart,
    out: *mut *mut c_char,
) -> VbStatus {
    guard(|| {
        non_null!(grid, out);
        let title = try_ffi!(str_arg(title, "title"));
        let cfg = Config::default();
        let svg = match chart {
            VbChart::Heatmap => {
                let scales = try_ffi!(cfg.core_scales().map_err(from_error));
                render_heatmap(title, &(*grid).grid, &scales, &cfg.layout, &[])
            }
            VbChart::Bars => render_barchart(title, &(*grid).grid, &cfg.layout, &[]),
        };
        let svg = try_ffi!(svg.map_err(from_error));
        give_string(svg.content, out)
    })
}

/// The grid as CSV (`hour_start,signal,mean,count`).
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable. Free the result
/// with [`vb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn vb_grid_to_csv(grid: *const VbGrid, out: *mut *mut c_char) -> VbStatus {
    guard(|| {
        non_null!(grid, out);
        let mut buf = Vec::new();
        try_ffi!((*grid).grid.write_csv(&mut buf).map_err(|e| from_error(e.into())));
        let text = try_ffi!(String::from_utf8(buf).map_err(|_| fail(VbStatus::Format, "CSV is not UTF-8")));
        give_string(text, out)
    })
}

/// # Safety
/// `grid` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vb_grid_free(grid: *mut VbGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Hours between axis ticks for a chart spanning `duration_hours`.
#[no_mangle]
pub extern "C" fn vb_tick_stride(duration_hours: f64) -> u32 {
    tick_stride(duration_hours)
}

/// Color of a normalized position (0 low, 0.5 center, 1 high) on a named
/// scheme such as "RYGB" or "GB_SEQ", as `0xRRGGBB`. A NaN position gives
/// the missing-data color.
///
/// # Safety
/// `scheme` must be a NUL-terminated string; `out_rgb` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vb_color_at(scheme: *const c_char, inverted: bool, position: f64, out_rgb: *mut u32) -> VbStatus {
    guard(|| {
        non_null!(out_rgb);
        let name = try_ffi!(str_arg(scheme, "scheme"));
        let name: SchemeName = try_ffi!(name.parse().map_err(from_error));
        let scale = try_ffi!(make_named_scale(name, ScaleMode::Continuous, inverted).map_err(from_error));
        let c = scale.map_color(Some(position));
        *out_rgb = (u32::from(c.r) << 16) | (u32::from(c.g) << 8) | u32::from(c.b);
        VbStatus::Ok
    })
}
