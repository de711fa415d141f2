//! C interface to the tilenoc scheduler and simulators.
//!
//! Every entry point returns a [`TncStatus`]. On failure the message is kept
//! per thread and read back with [`tnc_last_error`]. Handles are opaque and
//! must be released with the matching `*_free` function; strings handed out
//! by the library are released with [`tnc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tilenoc::metrics::{
    run_ablation, run_comparison, AblationReport, ExperimentOptions, ExperimentReport, Format, Scheme,
};
use tilenoc::workload_file::WorkloadFile;
use tilenoc::Error;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TncStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Unknown scheme, format or index.
    BadArgument = 3,
    /// The workload could not be read, parsed or validated.
    Validation = 4,
    /// A simulator failed or a result check did not hold.
    Simulation = 5,
    /// An internal panic was caught at the boundary.
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TncFormat {
    Csv = 0,
    Json = 1,
    Table = 2,
}

impl From<TncFormat> for Format {
    fn from(f: TncFormat) -> Format {
        match f {
            TncFormat::Csv => Format::Csv,
            TncFormat::Json => Format::Json,
            TncFormat::Table => Format::Table,
        }
    }
}

/// A parsed workload file.
pub struct TncWorkload(WorkloadFile);

/// Results of a comparison or ablation run.
pub enum TncReport {
    Compare(ExperimentReport),
    Ablation(AblationReport),
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: TncStatus, msg: impl Into<String>) -> TncStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> TncStatus {
    match e.exit_code() {
        3 => TncStatus::Simulation,
        _ => TncStatus::Validation,
    }
}

/// Run `f`, turning panics into [`TncStatus::Internal`].
fn guard(f: impl FnOnce() -> TncStatus) -> TncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TncStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TncStatus::Internal, msg)
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, TncStatus> {
    if p.is_null() {
        return Err(fail(TncStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(TncStatus::InvalidUtf8, "string argument is not UTF-8"))
}

fn give_string(s: String, out: *mut *mut c_char) -> TncStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            TncStatus::Ok
        }
        Err(_) => fail(TncStatus::Internal, "output contains a nul byte"),
    }
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tnc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse workload text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_workload_parse(text: *const c_char, out: *mut *mut TncWorkload) -> TncStatus {
    guard(|| {
        if out.is_null() {
            return fail(TncStatus::NullArgument, "null output pointer");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match WorkloadFile::parse(text) {
            Ok(w) => {
                *out = Box::into_raw(Box::new(TncWorkload(w)));
                TncStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Read and parse a workload file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_workload_load(path: *const c_char, out: *mut *mut TncWorkload) -> TncStatus {
    guard(|| {
        if out.is_null() {
            return fail(TncStatus::NullArgument, "null output pointer");
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match WorkloadFile::load(path) {
            Ok(w) => {
                *out = Box::into_raw(Box::new(TncWorkload(w)));
                TncStatus::Ok
            }
            Err(e) => fail(status_of(&e), format!("{path}: {e}")),
        }
    })
}

/// Number of layers in the workload.
///
/// # Safety
/// `w` must come from `tnc_workload_parse` or `tnc_workload_load`.
#[no_mangle]
pub unsafe extern "C" fn tnc_workload_layer_count(w: *const TncWorkload) -> usize {
    w.as_ref().map_or(0, |w| w.0.layers.len())
}

/// # Safety
/// `w` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tnc_workload_free(w: *mut TncWorkload) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Run every (wire width, scheme) cell.
///
/// `widths` may be null with `n_widths == 0` to use the file's own list.
/// `schemes` is a comma-separated subset of `tdm,dor,xyyx,romm,mad`, or null
/// for all of them.
///
/// # Safety
/// `w` must be a live workload handle, `widths` must point at `n_widths`
/// values, `schemes` must be null or NUL-terminated, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tnc_compare(
    w: *const TncWorkload,
    widths: *const u32,
    n_widths: usize,
    schemes: *const c_char,
    seed: u64,
    out: *mut *mut TncReport,
) -> TncStatus {
    guard(|| {
        let (Some(w), false) = (w.as_ref(), out.is_null()) else {
            return fail(TncStatus::NullArgument, "null workload or output pointer");
        };
        let widths: Vec<u32> = if n_widths == 0 {
            w.0.wire_widths.clone()
        } else if widths.is_null() {
            return fail(TncStatus::NullArgument, "null widths with nonzero count");
        } else {
            std::slice::from_raw_parts(widths, n_widths).to_vec()
        };
        let schemes: Vec<Scheme> = if schemes.is_null() {
            Scheme::ALL.to_vec()
        } else {
            let text = match read_str(schemes) {
                Ok(t) => t,
                Err(s) => return s,
            };
            let mut v = Vec::new();
            for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match Scheme::parse(name) {
                    Some(s) => v.push(s),
                    None => return fail(TncStatus::BadArgument, format!("unknown scheme `{name}`")),
                }
            }
            v
        };
        match run_comparison(&w.0, &widths, &schemes, &ExperimentOptions::with_seed(seed)) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(TncReport::Compare(r)));
                TncStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Run the ablation ladder at one wire width.
///
/// # Safety
/// `w` must be a live workload handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_ablate(
    w: *const TncWorkload,
    wire_width: u32,
    seed: u64,
    out: *mut *mut TncReport,
) -> TncStatus {
    guard(|| {
        let (Some(w), false) = (w.as_ref(), out.is_null()) else {
            return fail(TncStatus::NullArgument, "null workload or output pointer");
        };
        match run_ablation(&w.0, wire_width, &ExperimentOptions::with_seed(seed)) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(TncReport::Ablation(r)));
                TncStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Rows in the report: cells for a comparison, stages for an ablation.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn tnc_report_len(r: *const TncReport) -> usize {
    match r.as_ref() {
        Some(TncReport::Compare(c)) => c.cells.len(),
        Some(TncReport::Ablation(a)) => a.rows.len(),
        None => 0,
    }
}

/// Mean bounded ratio of comparison cell `index`.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_report_mean_bounded_ratio(r: *const TncReport, index: usize, out: *mut f64) -> TncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(TncStatus::NullArgument, "null report or output pointer");
        };
        let TncReport::Compare(c) = r else {
            return fail(TncStatus::BadArgument, "not a comparison report");
        };
        match c.cells.get(index) {
            Some(cell) => {
                *out = cell.mean_bounded_ratio;
                TncStatus::Ok
            }
            None => fail(TncStatus::BadArgument, format!("cell {index} out of range")),
        }
    })
}

/// Total communication latency of row `index`, in cycles.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_report_comm_latency(r: *const TncReport, index: usize, out: *mut u64) -> TncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(TncStatus::NullArgument, "null report or output pointer");
        };
        let v = match r {
            TncReport::Compare(c) => c.cells.get(index).map(|c| c.comm_latency),
            TncReport::Ablation(a) => a.rows.get(index).map(|r| r.comm_latency),
        };
        match v {
            Some(v) => {
                *out = v;
                TncStatus::Ok
            }
            None => fail(TncStatus::BadArgument, format!("row {index} out of range")),
        }
    })
}

/// Render the report. The string must be released with `tnc_string_free`.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_report_render(r: *const TncReport, format: TncFormat, out: *mut *mut c_char) -> TncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(TncStatus::NullArgument, "null report or output pointer");
        };
        let text = match r {
            TncReport::Compare(c) => c.render(format.into()),
            TncReport::Ablation(a) => a.render(format.into()),
        };
        give_string(text, out)
    })
}

/// Per-tile CSV of a comparison report.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tnc_report_tiles_csv(r: *const TncReport, out: *mut *mut c_char) -> TncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(TncStatus::NullArgument, "null report or output pointer");
        };
        match r {
            TncReport::Compare(c) => give_string(c.tiles_csv(), out),
            TncReport::Ablation(_) => fail(TncStatus::BadArgument, "not a comparison report"),
        }
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tnc_report_free(r: *mut TncReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tnc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
