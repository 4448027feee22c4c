//! C ABI over `unilift`.
//!
//! Every fallible function returns a [`UniliftStatus`]; on failure the
//! message is available from [`unilift_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Paths cross the boundary as row-major `rows * dim` arrays of doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use unilift::chains::{FiniteProcess, ProcessSpec};
use unilift::empirical::gamma_grid;
use unilift::lift::{lift_path, project};
use unilift::marginals::{MarginalSpec, MixedMarginal};
use unilift::mixing::{block_table, lifted_table};
use unilift::rng::stream;
use unilift::verify::{run_all, VerifyConfig};
use unilift::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniliftStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed or inconsistent marginal or process specification.
    InvalidSpec = 3,
    InvalidArgument = 4,
    /// A value outside the support of its marginal.
    NotSupported = 5,
    SizeCap = 6,
    /// Series without decay or an indefinite covariance.
    Numerical = 7,
    Panic = 8,
}

/// Marginal laws, one per coordinate.
pub struct UniliftMarginals {
    inner: Vec<MixedMarginal>,
}

pub struct UniliftProcess {
    inner: FiniteProcess,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UniliftCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Null(&'static str),
    Utf8,
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

fn status_of(e: &Error) -> UniliftStatus {
    match e {
        Error::InvalidMarginal(_)
        | Error::InvalidProcess(_)
        | Error::Reducible
        | Error::Periodic(_)
        | Error::Json(_) => UniliftStatus::InvalidSpec,
        Error::NotSupported { .. } => UniliftStatus::NotSupported,
        Error::SizeCap { .. } => UniliftStatus::SizeCap,
        Error::NoDecay(_) | Error::Indefinite(_) => UniliftStatus::Numerical,
        _ => UniliftStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> UniliftStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            UniliftStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            UniliftStatus::NullPointer
        }
        Ok(Err(Failure::Utf8)) => {
            set_last_error("string is not valid UTF-8");
            UniliftStatus::InvalidUtf8
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            UniliftStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8)
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(
    p: *mut f64,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn rows_of(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    if d == 0 {
        return Vec::new();
    }
    flat.chunks_exact(d).map(<[f64]>::to_vec).collect()
}

fn checked_len(rows: usize, d: usize) -> Result<usize, Failure> {
    rows.checked_mul(d)
        .ok_or_else(|| Failure::Core(Error::InvalidArgument("rows * dim overflows".into())))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn unilift_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string after
/// a successful one. Valid until the next call from the same thread.
#[no_mangle]
pub extern "C" fn unilift_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses one marginal object or an array of them.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn unilift_marginals_from_json(
    json: *const c_char,
    out: *mut *mut UniliftMarginals,
) -> UniliftStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let text = as_str(json, "json")?;
        let value: serde_json::Value = serde_json::from_str(text)?;
        let specs: Vec<MarginalSpec> = if value.is_array() {
            serde_json::from_value(value)?
        } else {
            vec![serde_json::from_value(value)?]
        };
        let inner = specs
            .into_iter()
            .map(MixedMarginal::try_from)
            .collect::<unilift::Result<Vec<_>>>()?;
        *out = Box::into_raw(Box::new(UniliftMarginals { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn unilift_marginals_free(m: *mut UniliftMarginals) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of coordinates, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn unilift_marginals_dim(m: *const UniliftMarginals) -> usize {
    m.as_ref().map_or(0, |m| m.inner.len())
}

unsafe fn marginal_at<'a>(
    m: *const UniliftMarginals,
    coord: usize,
) -> Result<&'a MixedMarginal, Failure> {
    let m = as_ref(m, "marginals")?;
    m.inner.get(coord).ok_or_else(|| {
        Failure::Core(Error::InvalidArgument(format!(
            "coordinate {coord} out of range"
        )))
    })
}

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_marginal_cdf(
    m: *const UniliftMarginals,
    coord: usize,
    t: f64,
    out: *mut f64,
) -> UniliftStatus {
    guard(|| {
        let v = marginal_at(m, coord)?.cdf(t);
        *out_ptr(out, "out")? = v;
        Ok(())
    })
}

/// Generalized inverse at a level in `(0, 1)`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_marginal_quantile(
    m: *const UniliftMarginals,
    coord: usize,
    s: f64,
    out: *mut f64,
) -> UniliftStatus {
    guard(|| {
        let v = marginal_at(m, coord)?.quantile(s)?;
        *out_ptr(out, "out")? = v;
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_process_from_json(
    json: *const c_char,
    out: *mut *mut UniliftProcess,
) -> UniliftStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let spec: ProcessSpec = serde_json::from_str(as_str(json, "json")?)?;
        let inner = FiniteProcess::from_spec(&spec)?;
        *out = Box::into_raw(Box::new(UniliftProcess { inner }));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn unilift_process_free(p: *mut UniliftProcess) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn unilift_process_dim(p: *const UniliftProcess) -> usize {
    p.as_ref().map_or(0, |p| p.inner.dim())
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn unilift_process_states(p: *const UniliftProcess) -> usize {
    p.as_ref().map_or(0, |p| p.inner.n_states())
}

/// Marginal law of each observed coordinate under the stationary law.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_process_observed_marginals(
    p: *const UniliftProcess,
    out: *mut *mut UniliftMarginals,
) -> UniliftStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = as_ref(p, "process")?.inner.observed_marginals()?;
        *out = Box::into_raw(Box::new(UniliftMarginals { inner }));
        Ok(())
    })
}

/// Samples `rows` observations into `x_out` (`rows * dim` doubles).
///
/// # Safety
/// `p` must be a live handle; `x_out` must hold `rows * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn unilift_process_simulate(
    p: *const UniliftProcess,
    seed: u64,
    rows: usize,
    x_out: *mut f64,
) -> UniliftStatus {
    guard(|| {
        let p = &as_ref(p, "process")?.inner;
        let d = p.dim();
        let out = slice_mut(x_out, checked_len(rows, d)?, "x_out")?;
        let path = p.sample_path(&mut stream(seed, 0), rows);
        for (dst, row) in out.chunks_exact_mut(d.max(1)).zip(&path.values) {
            dst.copy_from_slice(row);
        }
        Ok(())
    })
}

/// Lifts `rows` observed points into `u_out`.
///
/// # Safety
/// `m` must be a live handle; `x` and `u_out` must hold `rows * dim`
/// doubles each.
#[no_mangle]
pub unsafe extern "C" fn unilift_lift_path(
    m: *const UniliftMarginals,
    x: *const f64,
    rows: usize,
    seed: u64,
    u_out: *mut f64,
) -> UniliftStatus {
    guard(|| {
        let m = &as_ref(m, "marginals")?.inner;
        let len = checked_len(rows, m.len())?;
        let x_path = rows_of(slice(x, len, "x")?, m.len());
        let pair = lift_path(m, &x_path, &mut stream(seed, 0))?;
        let out = slice_mut(u_out, len, "u_out")?;
        for (dst, v) in out.iter_mut().zip(pair.u_path.iter().flatten()) {
            *dst = *v;
        }
        Ok(())
    })
}

/// Coordinatewise quantile map of `rows` levels into `x_out`.
///
/// # Safety
/// `m` must be a live handle; `u` and `x_out` must hold `rows * dim`
/// doubles each.
#[no_mangle]
pub unsafe extern "C" fn unilift_project_path(
    m: *const UniliftMarginals,
    u: *const f64,
    rows: usize,
    x_out: *mut f64,
) -> UniliftStatus {
    guard(|| {
        let m = &as_ref(m, "marginals")?.inner;
        let len = checked_len(rows, m.len())?;
        let u_path = rows_of(slice(u, len, "u")?, m.len());
        let x_path = project(m, &u_path)?;
        let out = slice_mut(x_out, len, "x_out")?;
        for (dst, v) in out.iter_mut().zip(x_path.iter().flatten()) {
            *dst = *v;
        }
        Ok(())
    })
}

/// Exact coefficients over observed blocks of length `block_len` at lag `n`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_mixing_exact(
    p: *const UniliftProcess,
    n: usize,
    block_len: usize,
    out: *mut UniliftCoefficients,
) -> UniliftStatus {
    guard(|| {
        let c = block_table(&as_ref(p, "process")?.inner, n, block_len)?.coefficients();
        *out_ptr(out, "out")? = UniliftCoefficients {
            alpha: c.alpha,
            beta: c.beta,
            phi: c.phi,
        };
        Ok(())
    })
}

/// Exact coefficients of the lifted process over atom intervals split `r`
/// ways.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_mixing_lifted(
    p: *const UniliftProcess,
    n: usize,
    block_len: usize,
    r: usize,
    out: *mut UniliftCoefficients,
) -> UniliftStatus {
    guard(|| {
        let p = &as_ref(p, "process")?.inner;
        let m = p.observed_marginals()?;
        let c = lifted_table(&m, p, n, block_len, r)?.coefficients();
        *out_ptr(out, "out")? = UniliftCoefficients {
            alpha: c.alpha,
            beta: c.beta,
            phi: c.phi,
        };
        Ok(())
    })
}

/// Long-run covariance of the indicators at `s` and `s2` (each `dim`
/// doubles), with the truncation chosen automatically.
///
/// # Safety
/// `p` must be a live handle; `s` and `s2` must hold `dim` doubles;
/// `value_out` must be writable; `tail_bound_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn unilift_gamma(
    p: *const UniliftProcess,
    s: *const f64,
    s2: *const f64,
    value_out: *mut f64,
    tail_bound_out: *mut f64,
) -> UniliftStatus {
    guard(|| {
        let p = &as_ref(p, "process")?.inner;
        let d = p.dim();
        let grid = vec![slice(s, d, "s")?.to_vec(), slice(s2, d, "s2")?.to_vec()];
        let g = gamma_grid(p, &grid, None)?;
        *out_ptr(value_out, "value_out")? = g.matrix[(0, 1)];
        if let Some(t) = tail_bound_out.as_mut() {
            *t = g.tail_bound;
        }
        Ok(())
    })
}

/// Runs the verification suite. `process_json` may be null for the default
/// chain. The JSON report is returned in `report_out` and must be released
/// with [`unilift_string_free`].
///
/// # Safety
/// `process_json` must be null or NUL-terminated; `passed_out` and
/// `report_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn unilift_verify(
    seed: u64,
    process_json: *const c_char,
    passed_out: *mut bool,
    report_out: *mut *mut c_char,
) -> UniliftStatus {
    guard(|| {
        let report_out = out_ptr(report_out, "report_out")?;
        *report_out = ptr::null_mut();
        let passed_out = out_ptr(passed_out, "passed_out")?;
        let process = if process_json.is_null() {
            None
        } else {
            Some(serde_json::from_str(as_str(process_json, "process_json")?)?)
        };
        let report = run_all(&VerifyConfig { seed, process });
        *passed_out = report.passed;
        let text = CString::new(report.to_json()?)
            .map_err(|_| Failure::Core(Error::InvalidArgument("report contains NUL".into())))?;
        *report_out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn unilift_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
