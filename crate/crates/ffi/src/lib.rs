//! C ABI over `hyperell`.
//!
//! Every function returns a [`HyperellStatus`]; results go through out
//! pointers. Handles are opaque and must be released with the matching
//! `_free` function. The message for the most recent failure on the calling
//! thread is available from [`hyperell_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyperell::argument::{n_theta, s_theta};
use hyperell::characters::{jacobi, QuadraticCharacter};
use hyperell::ff::FqContext;
use hyperell::fmodel::{find_fk_zeros, FkModel, ModelZeroSet};
use hyperell::hybrid::hybrid_check;
use hyperell::lfunction::{compute_coeffs, compute_zeros, lvalue, LData};
use hyperell::poly::{Budget, Poly};
use hyperell::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HyperellStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BudgetExceeded = 3,
    NoConvergence = 4,
    Overflow = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

/// L-polynomial of one quadratic character with its zeros.
pub struct HyperellLData(LData);

/// Zeros of the model `F_K` on the circle.
pub struct HyperellFkZeros(ModelZeroSet);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HyperellStatus {
    match e {
        Error::BudgetExceeded { .. } => HyperellStatus::BudgetExceeded,
        Error::NoConvergence { .. } | Error::MissedCrossing { .. } => HyperellStatus::NoConvergence,
        Error::Overflow(_) => HyperellStatus::Overflow,
        Error::Io(_) | Error::Json(_) => HyperellStatus::Internal,
        _ => HyperellStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), HyperellStatus>) -> HyperellStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HyperellStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside hyperell".into());
            HyperellStatus::Panic
        }
    }
}

fn lift<T>(r: hyperell::Result<T>) -> Result<T, HyperellStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null() -> HyperellStatus {
    set_error("null pointer argument".into());
    HyperellStatus::NullPointer
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], HyperellStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, HyperellStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), HyperellStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Copies `src` into `buf`; `written` receives the full length either way.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize, written: *mut usize) -> Result<(), HyperellStatus> {
    write(written, src.len())?;
    if len < src.len() {
        set_error(format!("buffer holds {len}, need {}", src.len()));
        return Err(HyperellStatus::BufferTooSmall);
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

fn build(d: Poly) -> Result<HyperellLData, HyperellStatus> {
    let chi = lift(QuadraticCharacter::new(d))?;
    let ld = lift(compute_coeffs(&chi, Budget::from_env()))?;
    Ok(HyperellLData(lift(compute_zeros(ld))?))
}

/// Builds L-data for `D` given by `len` coefficients, constant term first.
///
/// # Safety
/// `coeffs` must point to `len` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_new(
    q: u64,
    coeffs: *const u64,
    len: usize,
    out: *mut *mut HyperellLData,
) -> HyperellStatus {
    guard(|| {
        let c = slice(coeffs, len)?;
        let ctx = lift(FqContext::new(q))?;
        let ld = build(Poly::new(ctx, c.to_vec()))?;
        write(out, Box::into_raw(Box::new(ld)))
    })
}

/// Builds L-data for `D` written as text, e.g. `"x^3+2*x+1"`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_parse(
    q: u64,
    text: *const c_char,
    out: *mut *mut HyperellLData,
) -> HyperellStatus {
    guard(|| {
        if text.is_null() {
            return Err(null());
        }
        let s = CStr::from_ptr(text).to_str().map_err(|_| {
            set_error("text is not UTF-8".into());
            HyperellStatus::InvalidArgument
        })?;
        let ctx = lift(FqContext::new(q))?;
        let ld = build(lift(Poly::parse(ctx, s))?)?;
        write(out, Box::into_raw(Box::new(ld)))
    })
}

/// # Safety
/// `ld` must come from `hyperell_ldata_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_free(ld: *mut HyperellLData) {
    if !ld.is_null() {
        drop(Box::from_raw(ld));
    }
}

/// # Safety
/// `ld` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_genus(ld: *const HyperellLData, out: *mut usize) -> HyperellStatus {
    guard(|| write(out, handle(ld)?.0.genus()))
}

/// Coefficients `c_0..c_2g`. Fails with `Overflow` if one does not fit in
/// 64 bits and with `BufferTooSmall` if `len < 2g + 1`; `written` always
/// receives `2g + 1`.
///
/// # Safety
/// `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_coeffs(
    ld: *const HyperellLData,
    buf: *mut i64,
    len: usize,
    written: *mut usize,
) -> HyperellStatus {
    guard(|| {
        let c: Vec<i64> = handle(ld)?
            .0
            .coeffs()
            .iter()
            .map(|&x| i64::try_from(x))
            .collect::<Result<_, _>>()
            .map_err(|_| {
                set_error("coefficient does not fit in 64 bits".into());
                HyperellStatus::Overflow
            })?;
        copy_out(&c, buf, len, written)
    })
}

/// Zero angles `theta_j` in `[0, 1)`, sorted; `2g` values.
///
/// # Safety
/// `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_thetas(
    ld: *const HyperellLData,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> HyperellStatus {
    guard(|| copy_out(handle(ld)?.0.thetas(), buf, len, written))
}

/// `L(u)` at `u = re + i im`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hyperell_ldata_value(
    ld: *const HyperellLData,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HyperellStatus {
    guard(|| {
        let v = lvalue(&handle(ld)?.0, Complex64::new(re, im));
        write(out_re, v.re)?;
        write(out_im, v.im)
    })
}

/// `S(theta)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hyperell_s_theta(ld: *const HyperellLData, theta: f64, out: *mut f64) -> HyperellStatus {
    guard(|| write(out, s_theta(&handle(ld)?.0, theta)))
}

/// `N(theta)`, the number of zero angles at most `theta`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hyperell_n_theta(ld: *const HyperellLData, theta: f64, out: *mut usize) -> HyperellStatus {
    guard(|| write(out, n_theta(&handle(ld)?.0, theta)))
}

/// Relative defect `|L - P_K Z_K| / |L|` at `u = re + i im`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hyperell_hybrid_defect(
    ld: *const HyperellLData,
    re: f64,
    im: f64,
    k: usize,
    out: *mut f64,
) -> HyperellStatus {
    guard(|| write(out, hybrid_check(&handle(ld)?.0, Complex64::new(re, im), k).defect))
}

/// Zeros of `F_K` for truncation `k >= 1`.
///
/// # Safety
/// `ld` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyperell_fk_zeros_new(
    ld: *const HyperellLData,
    k: usize,
    out: *mut *mut HyperellFkZeros,
) -> HyperellStatus {
    guard(|| {
        let m = lift(FkModel::new(&handle(ld)?.0, k))?;
        let z = lift(find_fk_zeros(&m))?;
        write(out, Box::into_raw(Box::new(HyperellFkZeros(z))))
    })
}

/// # Safety
/// `z` must come from `hyperell_fk_zeros_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn hyperell_fk_zeros_free(z: *mut HyperellFkZeros) {
    if !z.is_null() {
        drop(Box::from_raw(z));
    }
}

/// Number of zeros, each tangential zero counted once.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hyperell_fk_zeros_count(z: *const HyperellFkZeros, out: *mut usize) -> HyperellStatus {
    guard(|| write(out, handle(z)?.0.count))
}

/// Zero angles `phi_j`, sorted.
///
/// # Safety
/// `buf` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn hyperell_fk_zeros_phis(
    z: *const HyperellFkZeros,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> HyperellStatus {
    guard(|| copy_out(&handle(z)?.0.phis, buf, len, written))
}

/// Jacobi symbol `(a / b)` for polynomials over F_q, `b` monic.
///
/// # Safety
/// Coefficient pointers must cover their lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyperell_jacobi(
    q: u64,
    a: *const u64,
    a_len: usize,
    b: *const u64,
    b_len: usize,
    out: *mut i8,
) -> HyperellStatus {
    guard(|| {
        let ctx = lift(FqContext::new(q))?;
        let pa = Poly::new(ctx, slice(a, a_len)?.to_vec());
        let pb = Poly::new(ctx, slice(b, b_len)?.to_vec());
        write(out, lift(jacobi(&pa, &pb))?)
    })
}

/// Copies the last error message on this thread into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length without the terminator.
///
/// # Safety
/// `buf` must have room for `len` bytes, or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn hyperell_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hyperell_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
