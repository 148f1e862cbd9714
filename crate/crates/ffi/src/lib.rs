//! C ABI over the `stl-agim` monitors.
//!
//! Formulas and traces are opaque heap handles created by `stl_*_new` /
//! `stl_*_parse` and released with the matching `*_free`. Every fallible call
//! returns an [`StlStatus`]; on failure `stl_last_error` yields a message that
//! stays valid until the next failing call on the same thread. Panics never
//! cross the boundary; they are reported as [`StlStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stl_agim::{Bounds, Error, Formula, QuadratureConfig, Range, Trace};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidInterval = 4,
    InvalidTrace = 5,
    OutOfDomain = 6,
    OutOfBounds = 7,
    NotNormalized = 8,
    UnknownVariable = 9,
    Unsupported = 10,
    Io = 11,
    Internal = 12,
    Panic = 13,
}

/// Parsed formula.
pub struct StlFormula(Formula);

/// Sampled, piecewise-linear multi-component signal.
pub struct StlTrace(Trace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> StlStatus {
    match err {
        Error::Syntax { .. } => StlStatus::Syntax,
        Error::Interval { .. } => StlStatus::InvalidInterval,
        Error::InvalidTrace(_) => StlStatus::InvalidTrace,
        Error::OutOfDomain { .. } => StlStatus::OutOfDomain,
        Error::OutOfBounds { .. } => StlStatus::OutOfBounds,
        Error::NotNormalized(_) => StlStatus::NotNormalized,
        Error::UnknownVariable(_) => StlStatus::UnknownVariable,
        Error::UnsupportedOperator(_) => StlStatus::Unsupported,
        Error::Io(_) => StlStatus::Io,
        _ => StlStatus::Internal,
    }
}

struct Failure(StlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(StlStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> StlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => StlStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            StlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(StlStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn bounds_arg(
    names: *const *const c_char,
    lower: *const f64,
    upper: *const f64,
    count: usize,
) -> Result<Bounds, Failure> {
    let names = slice_arg(names, count, "names")?;
    let lower = slice_arg(lower, count, "lower")?;
    let upper = slice_arg(upper, count, "upper")?;
    let mut bounds = Bounds::new();
    for i in 0..count {
        bounds.insert(str_arg(names[i], "names[i]")?, Range::new(lower[i], upper[i])?);
    }
    Ok(bounds)
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn stl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `text` into a new formula stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn stl_formula_parse(text: *const c_char, out: *mut *mut StlFormula) -> StlStatus {
    guard(|| {
        let formula: Formula = str_arg(text, "text")?.parse()?;
        write_out(out, Box::into_raw(Box::new(StlFormula(formula))), "out")
    })
}

/// Releases a formula; null is ignored.
///
/// # Safety
/// `formula` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stl_formula_free(formula: *mut StlFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Trace duration the formula needs beyond the evaluation time.
///
/// # Safety
/// `formula` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stl_formula_horizon(formula: *const StlFormula, out: *mut f64) -> StlStatus {
    guard(|| write_out(out, ref_arg(formula, "formula")?.0.horizon(), "out"))
}

/// Canonical text of the formula; release it with [`stl_string_free`].
/// Returns null if `formula` is null.
///
/// # Safety
/// `formula` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stl_formula_to_string(formula: *const StlFormula) -> *mut c_char {
    match formula.as_ref() {
        Some(f) => CString::new(f.0.to_string()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// New formula with thresholds mapped through the same normalization as
/// [`stl_trace_normalize`] with identical bounds.
///
/// # Safety
/// `formula` must be a live handle, the three arrays must hold `count`
/// elements, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stl_formula_normalize(
    formula: *const StlFormula,
    names: *const *const c_char,
    lower: *const f64,
    upper: *const f64,
    count: usize,
    out: *mut *mut StlFormula,
) -> StlStatus {
    guard(|| {
        let bounds = bounds_arg(names, lower, upper, count)?;
        let normalized = ref_arg(formula, "formula")?.0.normalize_thresholds(&bounds)?;
        write_out(out, Box::into_raw(Box::new(StlFormula(normalized))), "out")
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a trace from `n_times` strictly increasing `times` and a row-major
/// `values` matrix of `n_times * n_vars` samples.
///
/// # Safety
/// `names` must hold `n_vars` strings, `times` `n_times` values, `values`
/// `n_times * n_vars` values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stl_trace_new(
    names: *const *const c_char,
    n_vars: usize,
    times: *const f64,
    n_times: usize,
    values: *const f64,
    out: *mut *mut StlTrace,
) -> StlStatus {
    guard(|| {
        let names = slice_arg(names, n_vars, "names")?
            .iter()
            .map(|&p| str_arg(p, "names[i]").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let times = slice_arg(times, n_times, "times")?.to_vec();
        let total = n_times
            .checked_mul(n_vars)
            .ok_or_else(|| Failure(StlStatus::InvalidTrace, "trace size overflows".into()))?;
        let values = slice_arg(values, total, "values")?;
        let rows = if n_vars == 0 {
            vec![Vec::new(); n_times]
        } else {
            values.chunks(n_vars).map(<[f64]>::to_vec).collect()
        };
        let trace = Trace::new(names, times, rows)?;
        write_out(out, Box::into_raw(Box::new(StlTrace(trace))), "out")
    })
}

/// Reads a `time,name1,...` CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stl_trace_from_csv(path: *const c_char, out: *mut *mut StlTrace) -> StlStatus {
    guard(|| {
        let trace = Trace::read_csv(str_arg(path, "path")?)?;
        write_out(out, Box::into_raw(Box::new(StlTrace(trace))), "out")
    })
}

/// Releases a trace; null is ignored.
///
/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stl_trace_free(trace: *mut StlTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples in the trace.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stl_trace_len(trace: *const StlTrace, out: *mut usize) -> StlStatus {
    guard(|| write_out(out, ref_arg(trace, "trace")?.0.len(), "out"))
}

/// New trace with the listed components mapped to `[-1, 1]`. With
/// `count == 0` the trace is only checked to already lie in `[-1, 1]`.
///
/// # Safety
/// `trace` must be a live handle, the three arrays must hold `count`
/// elements, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stl_trace_normalize(
    trace: *const StlTrace,
    names: *const *const c_char,
    lower: *const f64,
    upper: *const f64,
    count: usize,
    out: *mut *mut StlTrace,
) -> StlStatus {
    guard(|| {
        let bounds = bounds_arg(names, lower, upper, count)?;
        let normalized = ref_arg(trace, "trace")?.0.normalize(&bounds)?;
        write_out(out, Box::into_raw(Box::new(StlTrace(normalized))), "out")
    })
}

/// AGIM robustness at time `t` on a normalized trace. `grid_step <= 0`
/// selects the default quadrature step.
///
/// # Safety
/// `formula` and `trace` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stl_eta(
    formula: *const StlFormula,
    trace: *const StlTrace,
    t: f64,
    grid_step: f64,
    out: *mut f64,
) -> StlStatus {
    guard(|| {
        let q = QuadratureConfig {
            step: (grid_step > 0.0).then_some(grid_step),
            ..QuadratureConfig::default()
        };
        let eta = stl_agim::eta(&ref_arg(formula, "formula")?.0, &ref_arg(trace, "trace")?.0, t, &q)?;
        write_out(out, eta.value, "out")
    })
}

/// Traditional (min/max) robustness at time `t`. `+inf` for `true`.
///
/// # Safety
/// `formula` and `trace` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stl_rho(
    formula: *const StlFormula,
    trace: *const StlTrace,
    t: f64,
    out: *mut f64,
) -> StlStatus {
    guard(|| {
        let rho = stl_agim::rho(&ref_arg(formula, "formula")?.0, &ref_arg(trace, "trace")?.0, t)?;
        write_out(out, rho.value, "out")
    })
}
