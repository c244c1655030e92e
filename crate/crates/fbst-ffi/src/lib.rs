//! C ABI for the fbst library.
//!
//! Reports are returned as opaque handles; all strings handed to the caller
//! must be released with `fbst_string_free`, reports with `fbst_report_free`.
//! Functions return 0 on success and the library's exit-code convention on
//! failure (2 = validation, 3 = numerical); `fbst_last_error` retrieves a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_double, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fbst::asymptotics::qq_confidence;
use fbst::error::FbstError;
use fbst::pipeline::{run_test, EvalReport};
use fbst::spec::TestSpec;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn code_of(err: &FbstError) -> c_int {
    err.exit_code() as c_int
}

/// Opaque evaluation report handle.
pub struct FbstReport {
    inner: EvalReport,
}

/// Run the full pipeline on a JSON spec document. Returns a report handle,
/// or null on failure (see `fbst_last_error`).
///
/// # Safety
/// `spec_json` must be a valid NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn fbst_run_test(spec_json: *const c_char) -> *mut FbstReport {
    clear_error();
    if spec_json.is_null() {
        set_error("spec_json is null");
        return std::ptr::null_mut();
    }
    let raw = match CStr::from_ptr(spec_json).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("spec_json is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        TestSpec::from_json(raw).and_then(|spec| run_test(&spec))
    }));
    match outcome {
        Ok(Ok(out)) => Box::into_raw(Box::new(FbstReport { inner: out.report })),
        Ok(Err(e)) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Serialize a report to a JSON string owned by the library. Free it with
/// `fbst_string_free`. Returns null if `report` is null.
///
/// # Safety
/// `report` must be a handle from `fbst_run_test` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn fbst_report_json(report: *const FbstReport) -> *mut c_char {
    if report.is_null() {
        set_error("report is null");
        return std::ptr::null_mut();
    }
    let json = (*report).inner.to_json_pretty();
    CString::new(json).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// The e-value of a report; NaN if `report` is null.
///
/// # Safety
/// `report` must be a live handle from `fbst_run_test`.
#[no_mangle]
pub unsafe extern "C" fn fbst_report_evalue(report: *const FbstReport) -> c_double {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).inner.result.ev
}

/// Release a report handle. Null is a no-op.
///
/// # Safety
/// `report` must be a handle from `fbst_run_test`, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn fbst_report_free(report: *mut FbstReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string produced by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from `fbst_report_json` or `fbst_last_error_take`, freed at
/// most once.
#[no_mangle]
pub unsafe extern "C" fn fbst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// QQ(t, h, c) confidence transform. Writes the value through `out` and
/// returns 0, or returns a nonzero error code leaving `out` untouched.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn fbst_qq(t: u32, h: u32, c: c_double, out: *mut c_double) -> c_int {
    clear_error();
    if out.is_null() {
        set_error("out is null");
        return 2;
    }
    match qq_confidence(t, h, c) {
        Ok(v) => {
            *out = v;
            0
        }
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    }
}

/// The most recent error message on this thread, or null if none. The
/// returned string is owned by the caller; free with `fbst_string_free`.
#[no_mangle]
pub extern "C" fn fbst_last_error_take() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow_mut().take() {
        Some(c) => c.into_raw(),
        None => std::ptr::null_mut(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn round_trip_through_the_c_surface() {
        let spec = CString::new(
            r#"{
            "model": {
                "family": "beta_bernoulli",
                "prior": {"a": 1.0, "b": 1.0},
                "data": {"successes": 3, "trials": 4}
            },
            "hypothesis": {"type": "point", "value": [0.5]},
            "sampling": {"method": "quadrature"}
        }"#,
        )
        .unwrap();
        unsafe {
            let report = fbst_run_test(spec.as_ptr());
            assert!(!report.is_null());
            let ev = fbst_report_evalue(report);
            assert!((ev - 0.242306).abs() < 1e-4, "{ev}");
            let json = fbst_report_json(report);
            assert!(!json.is_null());
            let text = CStr::from_ptr(json).to_str().unwrap().to_string();
            assert!(text.contains("\"ev\""));
            fbst_string_free(json);
            fbst_report_free(report);
        }
    }

    #[test]
    fn errors_surface_with_codes_and_messages() {
        let bad = CString::new("{\"nope\": true}").unwrap();
        unsafe {
            let report = fbst_run_test(bad.as_ptr());
            assert!(report.is_null());
            let msg = fbst_last_error_take();
            assert!(!msg.is_null());
            fbst_string_free(msg);

            let mut out = 0.0f64;
            assert_eq!(fbst_qq(2, 1, 0.5, &mut out), 0);
            assert!((out - 0.7610).abs() < 1e-4);
            assert_ne!(fbst_qq(2, 3, 0.5, &mut out), 0);
            assert!(fbst_run_test(std::ptr::null()).is_null());
        }
    }
}
