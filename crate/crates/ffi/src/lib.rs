//! C interface to sprlab.
//!
//! Handles are opaque pointers created by `*_load` functions and released by
//! the matching `*_free`. Every fallible call returns a [`SprlabStatus`]; on
//! failure, [`sprlab_last_error_message`] describes the most recent error on
//! the calling thread. Strings handed out by the library must be released with
//! [`sprlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sprlab::grid::{compute_shift_factors, load_case, NetworkCase};
use sprlab::learn::{posterior_multiclass, predict, OvoModel};
use sprlab::mpr::{enumerate_sprs, LoadBox, SprReport};
use sprlab::sced::{apply_dlr, build_sced, compute_lmp, solve_lp, Overrides};
use sprlab::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SprlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Infeasible = 5,
    Degenerate = 6,
    Internal = 7,
}

/// A validated network case.
pub struct SprlabCase {
    case: NetworkCase,
}

/// A trained one-vs-one price classifier.
pub struct SprlabModel {
    model: OvoModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn status_of(err: &Error) -> SprlabStatus {
    match err {
        Error::Io { .. } => SprlabStatus::Io,
        Error::Parse { .. } => SprlabStatus::Parse,
        Error::Infeasible | Error::Unbounded | Error::LowFeasibility { .. } | Error::NoFeasibleSeed { .. } => {
            SprlabStatus::Infeasible
        }
        Error::Degenerate(_) | Error::EmptyRegion { .. } => SprlabStatus::Degenerate,
        _ => SprlabStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), (SprlabStatus, String)>) -> SprlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SprlabStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SprlabStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (SprlabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SprlabStatus, String) {
    (SprlabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> (SprlabStatus, String) {
    (SprlabStatus::InvalidArgument, msg)
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SprlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (SprlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], (SprlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Loads and validates a case file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sprlab_case_load(path: *const c_char, out: *mut *mut SprlabCase) -> SprlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let case = load_case(Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SprlabCase { case }));
        Ok(())
    })
}

/// Parses and validates a case from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sprlab_case_from_json(json: *const c_char, out: *mut *mut SprlabCase) -> SprlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let case = NetworkCase::from_json(text, "<json>").map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SprlabCase { case }));
        Ok(())
    })
}

/// Releases a case; null is ignored.
///
/// # Safety
/// `case` must come from a `sprlab_case_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sprlab_case_free(case: *mut SprlabCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// Number of buses, or 0 for a null handle.
///
/// # Safety
/// `case` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sprlab_case_num_buses(case: *const SprlabCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.n_buses)
}

/// Number of buses whose load is a parameter, or 0 for a null handle.
///
/// # Safety
/// `case` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sprlab_case_num_load_buses(case: *const SprlabCase) -> usize {
    case.as_ref().map_or(0, |c| c.case.load_buses.len())
}

/// Solves one dispatch and writes the price at every bus.
///
/// `loads` holds either one value per bus or one per load bus. Line ratings
/// are scaled by `1 + xi`. `lmp_out` must hold `sprlab_case_num_buses` values.
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn sprlab_solve_lmp(
    case: *const SprlabCase,
    loads: *const f64,
    n_loads: usize,
    xi: f64,
    lmp_out: *mut f64,
    lmp_len: usize,
) -> SprlabStatus {
    guard(|| {
        let case = &case.as_ref().ok_or_else(|| null("case"))?.case;
        let v = slice_arg(loads, n_loads, "loads")?;
        let out = out_slice(lmp_out, lmp_len, "lmp_out")?;
        if lmp_len != case.n_buses {
            return Err(invalid(format!("lmp_out holds {lmp_len} values, case has {} buses", case.n_buses)));
        }
        let sf = compute_shift_factors(case).map_err(lib_err)?;
        let ratings = apply_dlr(case, xi).map_err(lib_err)?.ratings();
        let lp = build_sced(case, &sf, &Overrides { ratings: Some(ratings), ..Default::default() }).map_err(lib_err)?;
        let pd = if n_loads == case.n_buses {
            v.to_vec()
        } else if n_loads == case.load_buses.len() {
            lp.full_load(v)
        } else {
            return Err(invalid(format!("{n_loads} loads for {} buses", case.n_buses)));
        };
        let sol = solve_lp(&lp, &pd).map_err(lib_err)?;
        let lmp = compute_lmp(&sol, &sf).map_err(lib_err)?;
        out.copy_from_slice(&lmp.lambda);
        Ok(())
    })
}

/// Enumerates every price region inside the box `[lower, upper]` (one bound
/// per load bus) and returns the regions as JSON in `*json_out`.
///
/// # Safety
/// Pointers must be valid for `dim` values; `json_out` must be writable.
/// The returned string must be released with `sprlab_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sprlab_enumerate_json(
    case: *const SprlabCase,
    lower: *const f64,
    upper: *const f64,
    dim: usize,
    json_out: *mut *mut c_char,
) -> SprlabStatus {
    guard(|| {
        if json_out.is_null() {
            return Err(null("json_out"));
        }
        *json_out = ptr::null_mut();
        let case = &case.as_ref().ok_or_else(|| null("case"))?.case;
        let lo = slice_arg(lower, dim, "lower")?;
        let hi = slice_arg(upper, dim, "upper")?;
        let bx = LoadBox::new(lo.to_vec(), hi.to_vec()).map_err(lib_err)?;
        let regions = enumerate_sprs(case, &bx).map_err(lib_err)?;
        let json = serde_json::to_string(&SprReport::new(case, &bx, regions))
            .map_err(|e| (SprlabStatus::Internal, e.to_string()))?;
        *json_out = CString::new(json).map_err(|e| (SprlabStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Loads a model file written by `sprlab train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sprlab_model_load(path: *const c_char, out: *mut *mut SprlabModel) -> SprlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let model = OvoModel::load(Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SprlabModel { model }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from `sprlab_model_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sprlab_model_free(model: *mut SprlabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of price classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sprlab_model_num_classes(model: *const SprlabModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_classes())
}

/// Number of buses in the predicted price vectors, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sprlab_model_num_buses(model: *const SprlabModel) -> usize {
    model.as_ref().and_then(|m| m.model.class_lmps.first()).map_or(0, Vec::len)
}

unsafe fn features(m: &OvoModel, loads: *const f64, n: usize) -> Result<Vec<f64>, (SprlabStatus, String)> {
    let v = slice_arg(loads, n, "loads")?;
    if let Some(&b) = m.schema.buses.iter().find(|&&b| b >= n) {
        return Err(invalid(format!("model reads bus {} but only {n} loads were given", b + 1)));
    }
    Ok(m.schema.project(v))
}

/// Predicts the price class of a full per-bus load vector.
///
/// Writes the 0-based class to `class_out` and its price vector to `lmp_out`
/// (`sprlab_model_num_buses` values).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn sprlab_model_predict(
    model: *const SprlabModel,
    loads: *const f64,
    n_loads: usize,
    class_out: *mut usize,
    lmp_out: *mut f64,
    lmp_len: usize,
) -> SprlabStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        if class_out.is_null() {
            return Err(null("class_out"));
        }
        let out = out_slice(lmp_out, lmp_len, "lmp_out")?;
        let x = features(m, loads, n_loads)?;
        let (k, lmp) = predict(m, &x);
        if lmp.len() != lmp_len {
            return Err(invalid(format!("lmp_out holds {lmp_len} values, prices have {}", lmp.len())));
        }
        *class_out = k;
        out.copy_from_slice(&lmp);
        Ok(())
    })
}

/// Class probabilities for a full per-bus load vector
/// (`sprlab_model_num_classes` values, summing to one).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn sprlab_model_posterior(
    model: *const SprlabModel,
    loads: *const f64,
    n_loads: usize,
    p_out: *mut f64,
    p_len: usize,
) -> SprlabStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.model;
        let out = out_slice(p_out, p_len, "p_out")?;
        if p_len != m.n_classes() {
            return Err(invalid(format!("p_out holds {p_len} values, model has {} classes", m.n_classes())));
        }
        let x = features(m, loads, n_loads)?;
        out.copy_from_slice(&posterior_multiclass(m, &x).p);
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn sprlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sprlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
