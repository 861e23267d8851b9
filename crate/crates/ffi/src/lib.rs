//! C ABI for the scenario runner: load a scenario file, run its task, and
//! read the resulting report through an opaque handle.
//!
//! Conventions:
//! * every function is panic-safe (panics are caught and reported as
//!   [`OvfpStatus::InternalError`]);
//! * strings returned as `char*` are NUL-terminated UTF-8 owned by the
//!   caller and must be released with [`ovfp_string_free`];
//! * report handles must be released with [`ovfp_report_free`];
//! * null pointers are rejected with [`OvfpStatus::NullArgument`], never
//!   dereferenced.

use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ovfp_core::scenario::{emit_report, run_scenario, Overrides, Report, ReportFormat};

/// Status codes returned by every fallible entry point.  The first three
/// mirror the process exit codes of the command-line runner.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OvfpStatus {
    /// The task ran and every check passed.
    Ok = 0,
    /// The task ran and a mathematical check failed.
    VerificationFailed = 1,
    /// The scenario never ran: unreadable file, schema violation, or
    /// invalid construction.
    ConfigError = 2,
    /// A required pointer argument was null.
    NullArgument = 3,
    /// An internal invariant broke; the library state is still sound.
    InternalError = 4,
}

/// Opaque handle to a finished scenario report.
pub struct OvfpReport {
    inner: Report,
}

/// Optional overrides applied on top of the scenario file, mirroring the
/// command-line flags.  Pass NULL for "no overrides".
#[repr(C)]
#[derive(Clone, Copy)]
pub struct OvfpOverrides {
    /// Maximum word degree; negative keeps the scenario's value.
    pub maxdeg: i32,
    /// Numerical tolerance; zero, negative, or NaN keeps the scenario's
    /// value.
    pub tol: f64,
    /// Nonzero to replace the scenario's random seed with `seed`.
    pub has_seed: c_int,
    pub seed: u64,
}

fn overrides_from(c: Option<&OvfpOverrides>) -> Overrides {
    match c {
        None => Overrides::default(),
        Some(o) => Overrides {
            maxdeg: usize::try_from(o.maxdeg).ok(),
            tol: (o.tol.is_finite() && o.tol > 0.0).then_some(o.tol),
            seed: (o.has_seed != 0).then_some(o.seed),
        },
    }
}

fn status_for(report: &Report) -> OvfpStatus {
    match report.exit_code {
        0 => OvfpStatus::Ok,
        1 => OvfpStatus::VerificationFailed,
        _ => OvfpStatus::ConfigError,
    }
}

/// Run the scenario file at `path` (NUL-terminated UTF-8) and hand back a
/// report through `out_report`.  A report is produced whenever the status
/// is `OK`, `VERIFICATION_FAILED`, or `CONFIG_ERROR`; on `NULL_ARGUMENT`
/// or `INTERNAL_ERROR` the output pointer is left untouched.
///
/// # Safety
/// `path` must point to a NUL-terminated string and `out_report` to a
/// writable pointer slot; `overrides` may be null.
#[no_mangle]
pub unsafe extern "C" fn ovfp_run_scenario(
    path: *const c_char,
    overrides: *const OvfpOverrides,
    out_report: *mut *mut OvfpReport,
) -> OvfpStatus {
    if path.is_null() || out_report.is_null() {
        return OvfpStatus::NullArgument;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s.to_string(),
        Err(_) => return OvfpStatus::NullArgument,
    };
    let ovr = overrides_from(overrides.as_ref());
    match catch_unwind(AssertUnwindSafe(|| run_scenario(Path::new(&path), &ovr))) {
        Ok(report) => {
            let status = status_for(&report);
            *out_report = Box::into_raw(Box::new(OvfpReport { inner: report }));
            status
        }
        Err(_) => OvfpStatus::InternalError,
    }
}

/// 1 if every check in the report passed, 0 if not, -1 on a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`ovfp_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn ovfp_report_passed(report: *const OvfpReport) -> c_int {
    match report.as_ref() {
        None => -1,
        Some(r) => c_int::from(r.inner.passed),
    }
}

/// The process exit code the command-line runner would use for this report
/// (0 pass, 1 verification failure, 2 config error); -1 on a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`ovfp_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn ovfp_report_exit_code(report: *const OvfpReport) -> c_int {
    match report.as_ref() {
        None => -1,
        Some(r) => r.inner.exit_code as c_int,
    }
}

fn render(report: *const OvfpReport, format: ReportFormat) -> *mut c_char {
    // Safety contract is carried by the public callers.
    let report = match unsafe { report.as_ref() } {
        None => return std::ptr::null_mut(),
        Some(r) => &r.inner,
    };
    match catch_unwind(AssertUnwindSafe(|| emit_report(report, format))) {
        Ok(text) => match CString::new(text) {
            Ok(c) => c.into_raw(),
            Err(_) => std::ptr::null_mut(),
        },
        Err(_) => std::ptr::null_mut(),
    }
}

/// The report serialized as schema-stable JSON.  Returns a heap string to
/// release with [`ovfp_string_free`], or null on a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`ovfp_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn ovfp_report_json(report: *const OvfpReport) -> *mut c_char {
    render(report, ReportFormat::Structured)
}

/// The report rendered as human-readable text.  Returns a heap string to
/// release with [`ovfp_string_free`], or null on a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`ovfp_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn ovfp_report_text(report: *const OvfpReport) -> *mut c_char {
    render(report, ReportFormat::Text)
}

/// Release a report handle.  Null is a no-op; handles must not be used
/// afterwards.
///
/// # Safety
/// `report` must be null or a live handle from [`ovfp_run_scenario`],
/// released at most once.
#[no_mangle]
pub unsafe extern "C" fn ovfp_report_free(report: *mut OvfpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string returned by this library.  Null is a no-op.
///
/// # Safety
/// `s` must be null or a string returned by this library, released at most
/// once.
#[no_mangle]
pub unsafe extern "C" fn ovfp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn ovfp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
