//! C ABI for loading matrix functions, evaluating them, and counting
//! eigenvalues inside circles.
//!
//! Every entry point returns an [`NlepStatus`]. On failure the message is
//! kept per thread and read back with [`nlep_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nlep::counting::{count_arg_det, Contour, CountOptions};
use nlep::linalg::{self, c64};
use nlep::matfun::parse_problem;
use nlep::special::lambert::lambert_w;
use nlep::{Error, MatFun};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Domain = 5,
    SingularOnContour = 6,
    NoConvergence = 7,
    BufferTooSmall = 8,
    Numerical = 9,
    Panic = 10,
}

/// Opaque handle to a parsed matrix function.
pub struct NlepMatFun {
    inner: MatFun,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> NlepStatus {
    match e {
        Error::Parse { .. } | Error::DimensionMismatch { .. } => NlepStatus::Parse,
        Error::InvalidArgument(_) => NlepStatus::InvalidArgument,
        Error::Domain(_) | Error::DomainExit(_) => NlepStatus::Domain,
        Error::SingularOnContour { .. } => NlepStatus::SingularOnContour,
        Error::NoConvergence(_) => NlepStatus::NoConvergence,
        _ => NlepStatus::Numerical,
    }
}

fn fail(e: Error) -> NlepStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn guard(f: impl FnOnce() -> NlepStatus) -> NlepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == NlepStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            NlepStatus::Panic
        }
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to fit). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nlep_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a problem document (JSON, NUL-terminated) into a new handle.
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nlep_matfun_from_json(json: *const c_char, out: *mut *mut NlepMatFun) -> NlepStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NlepStatus::NullPointer;
        }
        *out = std::ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            set_error("input is not valid UTF-8");
            return NlepStatus::InvalidUtf8;
        };
        match parse_problem(text) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(NlepMatFun { inner: t }));
                NlepStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `h` must come from [`nlep_matfun_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nlep_matfun_free(h: *mut NlepMatFun) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nlep_matfun_dim(h: *const NlepMatFun) -> usize {
    h.as_ref().map_or(0, |h| h.inner.dim())
}

/// Writes `T(re + i im)` into `out` as `2 n^2` doubles, row-major, each entry
/// as (re, im).
///
/// # Safety
/// `h` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nlep_matfun_eval(h: *const NlepMatFun, re: f64, im: f64, out: *mut f64, len: usize) -> NlepStatus {
    guard(|| {
        let Some(h) = h.as_ref() else {
            set_error("null handle");
            return NlepStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null output buffer");
            return NlepStatus::NullPointer;
        }
        let n = h.inner.dim();
        if len < 2 * n * n {
            set_error(format!("output buffer holds {len} doubles, {} needed", 2 * n * n));
            return NlepStatus::BufferTooSmall;
        }
        match h.inner.eval(c64(re, im)) {
            Ok(m) => {
                let dst = std::slice::from_raw_parts_mut(out, 2 * n * n);
                for i in 0..n {
                    for j in 0..n {
                        dst[2 * (i * n + j)] = m[(i, j)].re;
                        dst[2 * (i * n + j) + 1] = m[(i, j)].im;
                    }
                }
                NlepStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Smallest singular value of `T(re + i im)`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nlep_sigma_min(h: *const NlepMatFun, re: f64, im: f64, out: *mut f64) -> NlepStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), out.is_null()) else {
            set_error("null pointer argument");
            return NlepStatus::NullPointer;
        };
        match h.inner.eval(c64(re, im)) {
            Ok(m) => {
                *out = linalg::sigma_min(&m);
                NlepStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of eigenvalues (with multiplicity) inside the circle of radius `r`
/// about `cre + i cim`, sampled as a polygon with `vertices` corners.
///
/// # Safety
/// `h` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nlep_count_circle(
    h: *const NlepMatFun,
    cre: f64,
    cim: f64,
    r: f64,
    vertices: usize,
    count: *mut i64,
) -> NlepStatus {
    guard(|| {
        let (Some(h), false) = (h.as_ref(), count.is_null()) else {
            set_error("null pointer argument");
            return NlepStatus::NullPointer;
        };
        let contour = match Contour::circle(c64(cre, cim), r, vertices) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match count_arg_det(&h.inner, &contour, &CountOptions::default()) {
            Ok(c) => {
                *count = c.count;
                NlepStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Branch `k` of the Lambert W function at `re + i im`.
///
/// # Safety
/// `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nlep_lambert_w(k: i64, re: f64, im: f64, out_re: *mut f64, out_im: *mut f64) -> NlepStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            set_error("null pointer argument");
            return NlepStatus::NullPointer;
        }
        match lambert_w(k, c64(re, im)) {
            Ok(w) => {
                *out_re = w.re;
                *out_im = w.im;
                NlepStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
