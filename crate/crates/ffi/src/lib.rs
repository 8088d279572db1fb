//! C ABI for `trizero`.
//!
//! Objects cross the boundary as opaque handles created by `trz_*` functions
//! and released with the matching `*_free`. Every function returns a
//! [`TrzStatus`]; on failure [`trz_last_error`] describes the cause. Strings
//! returned through out-pointers are owned by the caller and released with
//! [`trz_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use trizero::format;
use trizero::{Error, FGSeries, NFSeries, OscillatorParams, WLabel};

/// Result code of every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    /// Parameters outside the supported domain or degenerate.
    Domain = 5,
    /// A tolerance-checked residual was exceeded.
    Residual = 6,
    /// Any other numerical failure.
    Numerical = 7,
    Panic = 8,
}

/// Locus parameters.
pub struct TrzParams(OscillatorParams);

/// Nonlinearities `F`, `G`.
pub struct TrzSeries(FGSeries);

/// Normal form coefficients.
pub struct TrzNormalForm(NFSeries);

/// Plain values of a [`TrzParams`] handle.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrzParamsValues {
    pub a: f64,
    pub beta: f64,
    pub tau0: f64,
    pub b: f64,
    pub alpha: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> TrzStatus {
    match err {
        Error::Parse { .. } => TrzStatus::Parse,
        Error::Validation(_) | Error::Index(_) | Error::Arity { .. } | Error::Io(_) => TrzStatus::Validation,
        Error::Domain(_) | Error::DegenerateCubicTerm { .. } | Error::SpectralDegeneracy { .. } => TrzStatus::Domain,
        Error::Split { .. }
        | Error::CmResidual { .. }
        | Error::LambdaResidual { .. }
        | Error::Postcondition(_)
        | Error::LemmaPrecondition(_) => TrzStatus::Residual,
        _ => TrzStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TrzStatus>) -> TrzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TrzStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TrzStatus::Panic
        }
    }
}

fn check<T>(r: trizero::Result<T>) -> Result<T, TrzStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, TrzStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument");
        TrzStatus::NullPointer
    })
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, TrzStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(TrzStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        TrzStatus::InvalidUtf8
    })
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), TrzStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(TrzStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn emit_string(out: *mut *mut c_char, s: String) -> Result<(), TrzStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(TrzStatus::NullPointer);
    }
    *out = CString::new(s).map_err(|_| TrzStatus::Numerical)?.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `trz_*` call on the same thread.
#[no_mangle]
pub extern "C" fn trz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Locus parameters for `a > 0` and `beta`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn trz_locus(a: f64, beta: f64, out: *mut *mut TrzParams) -> TrzStatus {
    guard(|| {
        let p = check(trizero::locus(a, beta))?;
        emit(out, TrzParams(p))
    })
}

/// # Safety
/// `params` must come from [`trz_locus`]; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_params_get(params: *const TrzParams, out: *mut TrzParamsValues) -> TrzStatus {
    guard(|| {
        let p = &borrow(params)?.0;
        if out.is_null() {
            set_error("null output pointer");
            return Err(TrzStatus::NullPointer);
        }
        *out = TrzParamsValues {
            a: p.a,
            beta: p.beta,
            tau0: p.tau0,
            b: p.b,
            alpha: p.alpha,
            kappa1: p.kappa1,
            kappa2: p.kappa2,
        };
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`trz_locus`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn trz_params_free(params: *mut TrzParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Parses labeled coefficients (`A[2,0] = 1.0` lines after the format
/// header). `order` 0 takes the highest degree present.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_normal_form_parse(
    text: *const c_char,
    order: usize,
    out: *mut *mut TrzNormalForm,
) -> TrzStatus {
    guard(|| {
        let s = read_str(text)?;
        let nf = check(format::parse_nf(s, (order != 0).then_some(order)))?;
        emit(out, TrzNormalForm(nf))
    })
}

/// Coefficient of `label` (e.g. `"B[3,1]"`); 0 for degrees above the series order.
///
/// # Safety
/// `nf` must be a live handle, `label` NUL-terminated, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_normal_form_coefficient(
    nf: *const TrzNormalForm,
    label: *const c_char,
    out: *mut f64,
) -> TrzStatus {
    guard(|| {
        let nf = &borrow(nf)?.0;
        let l: WLabel = read_str(label)?.parse().map_err(|m: String| {
            set_error(m);
            TrzStatus::Parse
        })?;
        check(l.validate())?;
        if out.is_null() {
            set_error("null output pointer");
            return Err(TrzStatus::NullPointer);
        }
        *out = nf.get(&l);
        Ok(())
    })
}

/// Largest coefficient difference between two normal forms.
///
/// # Safety
/// Both handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_normal_form_max_diff(
    lhs: *const TrzNormalForm,
    rhs: *const TrzNormalForm,
    out: *mut f64,
) -> TrzStatus {
    guard(|| {
        let d = borrow(lhs)?.0.max_abs_diff(&borrow(rhs)?.0);
        if out.is_null() {
            set_error("null output pointer");
            return Err(TrzStatus::NullPointer);
        }
        *out = d;
        Ok(())
    })
}

/// # Safety
/// `nf` must be a live handle; `out` valid for writes. Free the result with [`trz_string_free`].
#[no_mangle]
pub unsafe extern "C" fn trz_normal_form_to_string(nf: *const TrzNormalForm, out: *mut *mut c_char) -> TrzStatus {
    guard(|| {
        let nf = &borrow(nf)?.0;
        emit_string(out, format::write_nf(nf))
    })
}

/// # Safety
/// `nf` must be a handle from this library, not used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn trz_normal_form_free(nf: *mut TrzNormalForm) {
    if !nf.is_null() {
        drop(Box::from_raw(nf));
    }
}

/// Parses `F = ...` / `G = ...` lines after the format header.
///
/// # Safety
/// `text` must be NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_series_parse(text: *const c_char, out: *mut *mut TrzSeries) -> TrzStatus {
    guard(|| {
        let fg = check(format::parse_fg(read_str(text)?))?;
        emit(out, TrzSeries(fg))
    })
}

/// # Safety
/// `series` must be a live handle; `out` valid for writes. Free the result with [`trz_string_free`].
#[no_mangle]
pub unsafe extern "C" fn trz_series_to_string(series: *const TrzSeries, out: *mut *mut c_char) -> TrzStatus {
    guard(|| {
        let fg = &borrow(series)?.0;
        emit_string(out, format::write_fg(fg))
    })
}

/// # Safety
/// `series` must be a handle from this library, not used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn trz_series_free(series: *mut TrzSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Nonlinearities whose normal form up to the target's order is `target`.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_realize(
    params: *const TrzParams,
    target: *const TrzNormalForm,
    out: *mut *mut TrzSeries,
) -> TrzStatus {
    guard(|| {
        let p = &borrow(params)?.0;
        let t = &borrow(target)?.0;
        let real = check(trizero::realize(t, p))?;
        emit(out, TrzSeries(real.fg))
    })
}

/// Normal form of `series` up to `order` (2..=6).
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trz_reduce(
    params: *const TrzParams,
    series: *const TrzSeries,
    order: usize,
    out: *mut *mut TrzNormalForm,
) -> TrzStatus {
    guard(|| {
        let p = &borrow(params)?.0;
        let fg = &borrow(series)?.0;
        if !(trizero::cli::MIN_ORDER..=trizero::cli::MAX_ORDER).contains(&order) {
            set_error(format!("order {order} outside 2..=6"));
            return Err(TrzStatus::Validation);
        }
        let (nf, _) = check(trizero::reduce(fg, p, order))?;
        emit(out, TrzNormalForm(nf))
    })
}

/// # Safety
/// `s` must be a string returned by this library, not used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn trz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
