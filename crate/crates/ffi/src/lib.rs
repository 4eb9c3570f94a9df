//! C ABI over `nccz`.
//!
//! Every call returns an [`NcczStatus`]; results go through out-pointers. Fields and kernels
//! are opaque heap handles released with their `_free` function. After a non-zero status,
//! `nccz_last_error` gives the message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nccz::algebra::{CMatrix, C64};
use nccz::certificates::weak11_certificate;
use nccz::cz::{decompose, default_s, validate};
use nccz::dyadic::io::{load_field, save_field};
use nccz::dyadic::{DyadicGrid, OperatorField};
use nccz::kernels::Kernel;
use nccz::maxnorm::{strong_max_norm, MaxNormP, MaximalFamily};
use nccz::operators::{truncated_czo, TruncationLadder};
use nccz::report::all_hold;
use nccz::NcczError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcczStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque matrix-valued field.
pub struct NcczField(OperatorField);

/// Opaque kernel.
pub struct NcczKernel(Kernel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &NcczError) -> NcczStatus {
    match e {
        NcczError::InvalidArgument(_)
        | NcczError::Parse(_)
        | NcczError::Json(_)
        | NcczError::LevelOutOfRange { .. }
        | NcczError::PointOutsideBox(_)
        | NcczError::CoarsestLevelViolation { .. }
        | NcczError::UnresolvableTruncation { .. }
        | NcczError::NotOdd(_) => NcczStatus::InvalidArgument,
        NcczError::DimensionMismatch { .. } => NcczStatus::DimensionMismatch,
        NcczError::EigenNonConvergence { .. } | NcczError::AmbiguousRank { .. } | NcczError::Internal(_) => NcczStatus::Numerical,
        NcczError::Io { .. } => NcczStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(NcczError),
}

impl From<NcczError> for Fail {
    fn from(e: NcczError) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NcczStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NcczStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            NcczStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(&msg);
            NcczStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(&format!("panic: {}", msg.unwrap_or_default()));
            NcczStatus::Panic
        }
    }
}

unsafe fn r<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Arg(format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

fn boxed_field(f: OperatorField) -> *mut NcczField {
    Box::into_raw(Box::new(NcczField(f)))
}

/// Copies the message of the last failed call on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
#[no_mangle]
pub unsafe extern "C" fn nccz_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Static version string.
#[no_mangle]
pub extern "C" fn nccz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Field from cell-major, row-major real and imaginary parts (`im` may be null), each of
/// length cells·n·n with cells = 2^{d(k_max − k_min)}.
#[no_mangle]
pub unsafe extern "C" fn nccz_field_new(
    d: usize,
    k_min: c_int,
    k_max: c_int,
    n: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut NcczField,
) -> NcczStatus {
    guard(|| {
        if re.is_null() {
            return Err(Fail::Null("re"));
        }
        let grid = DyadicGrid::new(d, k_min, k_max)?;
        let cells = grid.cell_count();
        if n == 0 || len != cells * n * n {
            return Err(Fail::Lib(NcczError::DimensionMismatch {
                expected: format!("{} values", cells * n * n),
                got: format!("{len} values"),
            }));
        }
        let re = std::slice::from_raw_parts(re, len);
        let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
        let values = (0..cells)
            .map(|c| {
                let data = (0..n * n).map(|k| C64::new(re[c * n * n + k], im.map_or(0.0, |v| v[c * n * n + k]))).collect();
                CMatrix::from_vec(n, data)
            })
            .collect();
        let f = OperatorField::new(grid, n, values)?;
        put(out, boxed_field(f), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nccz_field_load(path: *const c_char, out: *mut *mut NcczField) -> NcczStatus {
    guard(|| {
        let p = text(path, "path")?;
        let f = load_field(Path::new(p))?;
        put(out, boxed_field(f), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nccz_field_save(field: *const NcczField, path: *const c_char) -> NcczStatus {
    guard(|| {
        let f = r(field, "field")?;
        let p = text(path, "path")?;
        save_field(&f.0, Path::new(p))?;
        Ok(())
    })
}

/// Releases a field; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn nccz_field_free(field: *mut NcczField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of cells and matrix dimension.
#[no_mangle]
pub unsafe extern "C" fn nccz_field_shape(field: *const NcczField, cells: *mut usize, n: *mut usize) -> NcczStatus {
    guard(|| {
        let f = r(field, "field")?;
        put(cells, f.0.len(), "cells")?;
        put(n, f.0.dim(), "n")
    })
}

/// Copies values in the layout of `nccz_field_new`; `im` may be null.
#[no_mangle]
pub unsafe extern "C" fn nccz_field_values(field: *const NcczField, re: *mut f64, im: *mut f64, len: usize) -> NcczStatus {
    guard(|| {
        let f = r(field, "field")?;
        if re.is_null() {
            return Err(Fail::Null("re"));
        }
        let n = f.0.dim();
        let need = f.0.len() * n * n;
        if len != need {
            return Err(Fail::Lib(NcczError::DimensionMismatch { expected: format!("{need} values"), got: format!("{len} values") }));
        }
        let mut k = 0;
        for m in f.0.values() {
            for z in m.as_slice() {
                *re.add(k) = z.re;
                if !im.is_null() {
                    *im.add(k) = z.im;
                }
                k += 1;
            }
        }
        Ok(())
    })
}

/// ‖f‖_p; pass p = INFINITY for the max operator norm.
#[no_mangle]
pub unsafe extern "C" fn nccz_field_norm(field: *const NcczField, p: f64, out: *mut f64) -> NcczStatus {
    guard(|| {
        let f = r(field, "field")?;
        if !(p >= 1.0) {
            return Err(Fail::Arg(format!("p must be >= 1, got {p}")));
        }
        put(out, f.0.norm(p)?, "out")
    })
}

/// Kernel by name ("hilbert", "riesz-1", "rough:cos", ...) in dimension d.
#[no_mangle]
pub unsafe extern "C" fn nccz_kernel_from_name(name: *const c_char, d: usize, out: *mut *mut NcczKernel) -> NcczStatus {
    guard(|| {
        let k = Kernel::from_name(text(name, "name")?, d)?;
        put(out, Box::into_raw(Box::new(NcczKernel(k))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nccz_kernel_free(kernel: *mut NcczKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// T_ε f as a new field.
#[no_mangle]
pub unsafe extern "C" fn nccz_truncated_apply(
    kernel: *const NcczKernel,
    field: *const NcczField,
    eps: f64,
    out: *mut *mut NcczField,
) -> NcczStatus {
    guard(|| {
        let k = r(kernel, "kernel")?;
        let f = r(field, "field")?;
        let t = truncated_czo(&k.0, &f.0, eps)?;
        put(out, boxed_field(t), "out")
    })
}

/// Runs the CZ decomposition at level λ (s = 0 picks the default) and reports whether every
/// property check holds.
#[no_mangle]
pub unsafe extern "C" fn nccz_cz_validate(field: *const NcczField, lambda: f64, s: usize, all_ok: *mut c_int) -> NcczStatus {
    guard(|| {
        let f = r(field, "field")?;
        let s = if s == 0 { default_s(f.0.grid().d) } else { s };
        let dec = decompose(&f.0, lambda, s)?;
        let rep = validate(&dec, &f.0)?;
        put(all_ok, all_hold(&rep) as c_int, "all_ok")
    })
}

/// Strong maximal norm of `count` Hermitian fields; p is 1, 2 or INFINITY.
#[no_mangle]
pub unsafe extern "C" fn nccz_strong_max_norm(fields: *const *const NcczField, count: usize, p: f64, out: *mut f64) -> NcczStatus {
    guard(|| {
        if fields.is_null() {
            return Err(Fail::Null("fields"));
        }
        let p = match p {
            x if x == 1.0 => MaxNormP::One,
            x if x == 2.0 => MaxNormP::Two,
            x if x.is_infinite() && x > 0.0 => MaxNormP::Inf,
            _ => return Err(Fail::Arg(format!("p must be 1, 2 or infinity, got {p}"))),
        };
        let members = (0..count)
            .map(|i| r(*fields.add(i), "fields[i]").map(|f| f.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let fam = MaximalFamily::unlabeled(members)?;
        put(out, strong_max_norm(&fam, p)?.objective, "out")
    })
}

/// Weak-(1,1) certificate at λ on the default ladder, as a JSON string owned by the caller
/// (release with `nccz_string_free`).
#[no_mangle]
pub unsafe extern "C" fn nccz_weak11_json(
    kernel: *const NcczKernel,
    field: *const NcczField,
    lambda: f64,
    out: *mut *mut c_char,
) -> NcczStatus {
    guard(|| {
        let k = r(kernel, "kernel")?;
        let f = r(field, "field")?;
        let rep = weak11_certificate(&f.0, lambda, &k.0, TruncationLadder::default_for(f.0.grid()))?;
        let s = serde_json::to_string(&rep).map_err(NcczError::from)?;
        let c = CString::new(s).map_err(|e| Fail::Arg(e.to_string()))?;
        put(out, c.into_raw(), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn nccz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
