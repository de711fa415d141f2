use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use tilenoc_ffi::*;

fn bundled(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/workloads").join(format!("{name}.toml"));
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = tnc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    tnc_string_free(s);
    out
}

#[test]
fn compare_and_render() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(tnc_workload_load(bundled("hybrid-b").as_ptr(), &mut w), TncStatus::Ok);
        assert!(tnc_last_error().is_null());
        assert_eq!(tnc_workload_layer_count(w), 5);

        let widths = [1024u32, 2048];
        let schemes = CString::new("tdm,dor").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(tnc_compare(w, widths.as_ptr(), widths.len(), schemes.as_ptr(), 3, &mut r), TncStatus::Ok);
        assert_eq!(tnc_report_len(r), 4);

        let mut ratio = 0.0;
        assert_eq!(tnc_report_mean_bounded_ratio(r, 0, &mut ratio), TncStatus::Ok);
        assert!(ratio > 0.0);
        assert_eq!(tnc_report_mean_bounded_ratio(r, 4, &mut ratio), TncStatus::BadArgument);
        assert!(last_error().contains("out of range"));

        let mut s = ptr::null_mut();
        assert_eq!(tnc_report_render(r, TncFormat::Csv, &mut s), TncStatus::Ok);
        let csv = take(s);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("workload,wire_width,scheme"));

        assert_eq!(tnc_report_render(r, TncFormat::Json, &mut s), TncStatus::Ok);
        assert!(take(s).contains("\"cells\""));
        assert_eq!(tnc_report_tiles_csv(r, &mut s), TncStatus::Ok);
        assert!(take(s).lines().count() > 4);

        tnc_report_free(r);
        tnc_workload_free(w);
    }
}

#[test]
fn ablation_rows_fall() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(tnc_workload_load(bundled("pipeline").as_ptr(), &mut w), TncStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(tnc_ablate(w, 1024, 0, &mut r), TncStatus::Ok);
        let rows = tnc_report_len(r);
        assert_eq!(rows, 5);
        let mut prev = u64::MAX;
        for i in 0..rows {
            let mut lat = 0;
            assert_eq!(tnc_report_comm_latency(r, i, &mut lat), TncStatus::Ok);
            assert!(lat <= prev);
            prev = lat;
        }
        let mut s = ptr::null_mut();
        assert_eq!(tnc_report_tiles_csv(r, &mut s), TncStatus::BadArgument);
        tnc_report_free(r);
        tnc_workload_free(w);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(tnc_workload_parse(ptr::null(), &mut w), TncStatus::NullArgument);
        let text = CString::new("version = 7\n").unwrap();
        assert_eq!(tnc_workload_parse(text.as_ptr(), &mut w), TncStatus::Validation);
        assert!(last_error().contains("version 7"));
        assert!(w.is_null());

        let missing = CString::new("/no/such/file.toml").unwrap();
        assert_eq!(tnc_workload_load(missing.as_ptr(), &mut w), TncStatus::Validation);
        assert!(last_error().starts_with("/no/such/file.toml"));

        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(tnc_workload_parse(bad.as_ptr().cast(), &mut w), TncStatus::InvalidUtf8);

        assert_eq!(tnc_workload_load(bundled("hybrid-a").as_ptr(), &mut w), TncStatus::Ok);
        let mut r = ptr::null_mut();
        let schemes = CString::new("tdm,warp").unwrap();
        assert_eq!(tnc_compare(w, ptr::null(), 0, schemes.as_ptr(), 0, &mut r), TncStatus::BadArgument);
        assert!(last_error().contains("warp"));
        assert_eq!(tnc_compare(w, ptr::null(), 2, ptr::null(), 0, &mut r), TncStatus::NullArgument);
        assert_eq!(tnc_compare(ptr::null(), ptr::null(), 0, ptr::null(), 0, &mut r), TncStatus::NullArgument);
        assert!(r.is_null());
        assert_eq!(tnc_report_len(ptr::null()), 0);

        tnc_workload_free(w);
        tnc_workload_free(ptr::null_mut());
        tnc_report_free(ptr::null_mut());
        tnc_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(tnc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tilenoc.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let names: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(names.len() >= 10);
    for name in names {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct TncWorkload TncWorkload;", "typedef struct TncReport TncReport;", "TNC_STATUS_OK = 0"] {
        assert!(header.contains(ty), "{ty}");
    }
}
