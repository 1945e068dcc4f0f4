//! C ABI for divlab.
//!
//! Every fallible call returns a [`DivlabStatus`]; on failure the message is
//! available from [`divlab_last_error`] on the same thread. Fields are opaque
//! handles released with [`divlab_field_free`]. Strings returned by the
//! library are released with [`divlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use divlab::calculus::numeric_divergence;
use divlab::cli::{execute, is_usage_error, recipes, Scenario};
use divlab::fields::{field_from_registry, CylindricalPotential, Gamma, VectorField};
use divlab::rigidity::{certify_potential, default_certification_grid, gamma_bounds};
use divlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivlabStatus {
    Ok = 0,
    /// Null pointer, bad length, invalid UTF-8 or an invalid parameter.
    InvalidArgument = 1,
    UnknownField = 2,
    OutOfDomain = 3,
    /// The computation itself failed (integration, quadrature, preconditions).
    NumericalFailure = 4,
    /// The run completed and the report's verdict is FAIL.
    VerificationFailed = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(e: Error) -> DivlabStatus {
    let status = match &e {
        Error::UnknownField(_) | Error::UnknownScenario(_) => DivlabStatus::UnknownField,
        Error::OutOfDomain { .. } => DivlabStatus::OutOfDomain,
        e if is_usage_error(e) => DivlabStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => DivlabStatus::InvalidArgument,
        _ => DivlabStatus::NumericalFailure,
    };
    set_error(e.to_string());
    status
}

fn invalid(msg: &str) -> DivlabStatus {
    set_error(msg);
    DivlabStatus::InvalidArgument
}

/// Runs `f`, turning panics into `Panic` and clearing the error slot first.
fn guard<F: FnOnce() -> DivlabStatus>(f: F) -> DivlabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            DivlabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, DivlabStatus> {
    if s.is_null() {
        return Err(invalid("null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid("string argument is not UTF-8"))
}

/// Opaque vector field handle.
pub struct DivlabField(VectorField);

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn divlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn divlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a field from a registry name such as `capillary:R=1`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn divlab_field_from_registry(name: *const c_char, out: *mut *mut DivlabField) -> DivlabStatus {
    guard(|| {
        if out.is_null() {
            return invalid("null output pointer");
        }
        *out = ptr::null_mut();
        let name = match str_arg(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match field_from_registry(name) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(DivlabField(f)));
                DivlabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a field. Null is ignored.
///
/// # Safety
/// `field` must come from [`divlab_field_from_registry`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn divlab_field_free(field: *mut DivlabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Ambient dimension, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn divlab_field_dim(field: *const DivlabField) -> usize {
    field.as_ref().map_or(0, |f| f.0.dim)
}

/// Certified bound on the sup norm of the field.
///
/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn divlab_field_sup_bound(field: *const DivlabField, out: *mut f64) -> DivlabStatus {
    guard(|| match (field.as_ref(), out.is_null()) {
        (Some(f), false) => {
            *out = f.0.sup_bound;
            DivlabStatus::Ok
        }
        _ => invalid("null argument"),
    })
}

unsafe fn point<'a>(f: &DivlabField, x: *const f64, len: usize) -> Result<&'a [f64], DivlabStatus> {
    if x.is_null() {
        return Err(invalid("null point"));
    }
    if len != f.0.dim {
        return Err(invalid(&format!("point has {len} coordinates, field dimension is {}", f.0.dim)));
    }
    Ok(std::slice::from_raw_parts(x, len))
}

/// Evaluates the field at `x` (length `len`) into `out` (length `out_len`).
///
/// # Safety
/// `x` must point to `len` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn divlab_field_eval(
    field: *const DivlabField,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> DivlabStatus {
    guard(|| {
        let Some(f) = field.as_ref() else { return invalid("null field") };
        let x = match point(f, x, len) {
            Ok(x) => x,
            Err(s) => return s,
        };
        if out.is_null() || out_len < f.0.dim {
            return invalid("output buffer too small");
        }
        match f.0.eval(x) {
            Ok(v) => {
                std::slice::from_raw_parts_mut(out, v.len()).copy_from_slice(&v);
                DivlabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Central-difference divergence at `x` with step `h`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn divlab_field_numeric_divergence(
    field: *const DivlabField,
    x: *const f64,
    len: usize,
    h: f64,
    out: *mut f64,
) -> DivlabStatus {
    guard(|| {
        let Some(f) = field.as_ref() else { return invalid("null field") };
        let x = match point(f, x, len) {
            Ok(x) => x,
            Err(s) => return s,
        };
        if out.is_null() {
            return invalid("null output pointer");
        }
        match numeric_divergence(&f.0, x, h) {
            Ok(d) => {
                *out = d;
                DivlabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// The two admissible upper bounds on gamma for the counterexample in dimension `n`.
///
/// # Safety
/// `out_first` and `out_second` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn divlab_gamma_bounds(n: usize, out_first: *mut f64, out_second: *mut f64) -> DivlabStatus {
    guard(|| {
        if out_first.is_null() || out_second.is_null() {
            return invalid("null output pointer");
        }
        match gamma_bounds(n) {
            Ok((a, b)) => {
                *out_first = a;
                *out_second = b;
                DivlabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Certifies the counterexample potential in dimension `n` on the default
/// grid. `gamma <= 0` selects the largest admissible value. Writes whether the
/// certificate holds and the smallest condition margin.
///
/// # Safety
/// `out_certified` and `out_min_margin` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn divlab_certify_counterexample(
    n: usize,
    gamma: f64,
    c: f64,
    out_certified: *mut bool,
    out_min_margin: *mut f64,
) -> DivlabStatus {
    guard(|| {
        if out_certified.is_null() || out_min_margin.is_null() {
            return invalid("null output pointer");
        }
        let g = if gamma > 0.0 { Gamma::Value(gamma) } else { Gamma::Auto };
        let cert = CylindricalPotential::counterexample(n, g)
            .and_then(|p| certify_potential(&p, &default_certification_grid(), c));
        match cert {
            Ok(cert) => {
                *out_certified = cert.certified();
                *out_min_margin = cert.conditions.iter().map(|m| m.min_margin).fold(f64::INFINITY, f64::min);
                DivlabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn run(sc: Scenario, seed: u64, out_report: *mut *mut c_char) -> DivlabStatus {
    let out = match execute(&sc, seed) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let json = match out.report.to_json_pretty() {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    *out_report = CString::new(json).map_or(ptr::null_mut(), CString::into_raw);
    if out.report.passed() {
        DivlabStatus::Ok
    } else {
        set_error(format!("verification failed: {}", sc.name));
        DivlabStatus::VerificationFailed
    }
}

/// Runs a scenario given as JSON (`name`, `operation`, optional `field`,
/// `params`, `tolerances`) and returns the JSON report in `out_report`.
/// The report is also returned when the status is `VerificationFailed`.
///
/// # Safety
/// `scenario_json` must be a NUL-terminated string and `out_report` a valid
/// pointer; the returned string must be released with [`divlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn divlab_run_scenario_json(
    scenario_json: *const c_char,
    seed: u64,
    out_report: *mut *mut c_char,
) -> DivlabStatus {
    guard(|| {
        if out_report.is_null() {
            return invalid("null output pointer");
        }
        *out_report = ptr::null_mut();
        let text = match str_arg(scenario_json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match serde_json::from_str::<Scenario>(text) {
            Ok(sc) => run(sc, seed, out_report),
            Err(e) => invalid(&format!("scenario JSON: {e}")),
        }
    })
}

/// Runs a built-in recipe by name; see [`divlab_run_scenario_json`].
///
/// # Safety
/// As for [`divlab_run_scenario_json`].
#[no_mangle]
pub unsafe extern "C" fn divlab_run_recipe(name: *const c_char, seed: u64, out_report: *mut *mut c_char) -> DivlabStatus {
    guard(|| {
        if out_report.is_null() {
            return invalid("null output pointer");
        }
        *out_report = ptr::null_mut();
        let name = match str_arg(name) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match recipes::find(name) {
            Ok(sc) => run(sc, seed, out_report),
            Err(e) => fail(e),
        }
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn divlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
