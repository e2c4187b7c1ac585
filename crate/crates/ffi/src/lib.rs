//! C ABI over `ocx`.
//!
//! Models are opaque `OcxModel` handles. Every fallible call returns an
//! `OcxStatus`; on failure `ocx_last_error` describes the problem. The
//! message belongs to the calling thread and stays valid until that thread's
//! next call into the library.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ocx::{KernelSpec, Matrix, OcxError, OneClassModel, TrainOptions};

/// Opaque trained model.
pub struct OcxModel {
    inner: OneClassModel,
}

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OcxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ShapeMismatch = 3,
    Numerical = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &OcxError) -> OcxStatus {
    match e {
        _ if e.is_numerical() => OcxStatus::Numerical,
        OcxError::Parameter(_) | OcxError::Domain(_) => OcxStatus::InvalidParameter,
        OcxError::Shape(_) => OcxStatus::ShapeMismatch,
        OcxError::Parse(_) | OcxError::Json(_) => OcxStatus::Parse,
        OcxError::Io(_) => OcxStatus::Io,
        _ => OcxStatus::InvalidParameter,
    }
}

struct Fail(OcxStatus, String);

impl From<OcxError> for Fail {
    fn from(e: OcxError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(OcxStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OcxStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OcxStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OcxStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const OcxModel) -> Result<&'a OneClassModel, Fail> {
    model
        .as_ref()
        .map(|m| &m.inner)
        .ok_or_else(|| null("model"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

#[allow(clippy::too_many_arguments)]
unsafe fn train(
    data: *const f64,
    n: usize,
    d: usize,
    kernel: KernelSpec,
    nu: f64,
    tol: f64,
    max_iter: u64,
    out: *mut *mut OcxModel,
) -> OcxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(OcxStatus::ShapeMismatch, "n * d overflows".into()))?;
        let values = slice(data, len, "data")?;
        let matrix = Matrix::new(n, d, values.to_vec())?;
        let opts = TrainOptions {
            tol,
            max_iter,
            ..TrainOptions::default()
        };
        let (inner, _) = ocx::train_with_options(&matrix, kernel, nu, &opts)?;
        *out = Box::into_raw(Box::new(OcxModel { inner }));
        Ok(())
    })
}

/// Trains with the exponential kernel `exp(-d^q / (q sigma^q))` on `n`
/// row-major samples of dimension `d`.
///
/// # Safety
/// `data` must point to `n * d` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ocx_train_exponential(
    data: *const f64,
    n: usize,
    d: usize,
    q: f64,
    sigma: f64,
    nu: f64,
    tol: f64,
    max_iter: u64,
    out: *mut *mut OcxModel,
) -> OcxStatus {
    train(
        data,
        n,
        d,
        KernelSpec::Exponential { q, sigma },
        nu,
        tol,
        max_iter,
        out,
    )
}

/// Trains with the t-Student kernel `1 / (a + d^q)`.
///
/// # Safety
/// As for `ocx_train_exponential`.
#[no_mangle]
pub unsafe extern "C" fn ocx_train_tstudent(
    data: *const f64,
    n: usize,
    d: usize,
    q: f64,
    a: f64,
    nu: f64,
    tol: f64,
    max_iter: u64,
    out: *mut *mut OcxModel,
) -> OcxStatus {
    train(
        data,
        n,
        d,
        KernelSpec::TStudent { q, a },
        nu,
        tol,
        max_iter,
        out,
    )
}

/// Loads a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ocx_model_from_json(
    json: *const c_char,
    out: *mut *mut OcxModel,
) -> OcxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Fail(OcxStatus::Parse, "json is not UTF-8".into()))?;
        let inner = OneClassModel::from_json(text)?;
        *out = Box::into_raw(Box::new(OcxModel { inner }));
        Ok(())
    })
}

/// Serialises a model to JSON. Release the string with `ocx_string_free`.
///
/// # Safety
/// `model` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ocx_model_to_json(
    model: *const OcxModel,
    out: *mut *mut c_char,
) -> OcxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let json = model_ref(model)?.to_json()?;
        let c =
            CString::new(json).map_err(|_| Fail(OcxStatus::Parse, "json contains NUL".into()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or come from `ocx_model_to_json`.
#[no_mangle]
pub unsafe extern "C" fn ocx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `model` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ocx_model_free(model: *mut OcxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input dimension, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ocx_model_dim(model: *const OcxModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// Number of support vectors, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ocx_model_num_sv(model: *const OcxModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.m())
}

/// Offset of the decision function, NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ocx_model_rho(model: *const OcxModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.inner.rho)
}

unsafe fn scalar(
    model: *const OcxModel,
    x: *const f64,
    d: usize,
    out: *mut f64,
    f: fn(&OneClassModel, &[f64]) -> ocx::Result<f64>,
) -> OcxStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = slice(x, d, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f(m, x)?;
        Ok(())
    })
}

/// `g(x) = Σ_j α_j k(x, u_j)`.
///
/// # Safety
/// `x` must point to `d` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ocx_inlierness(
    model: *const OcxModel,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> OcxStatus {
    scalar(model, x, d, out, ocx::inlierness)
}

/// Outlierness `o(x)` of the model's kernel family.
///
/// # Safety
/// `x` must point to `d` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ocx_outlierness(
    model: *const OcxModel,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> OcxStatus {
    scalar(model, x, d, out, ocx::outlierness)
}

/// Relevance of each input variable for the outlierness. Writes `d` values
/// to `relevance` and their sum to `total` (which may be null).
///
/// # Safety
/// `x` and `relevance` must each point to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn ocx_explain_outlier(
    model: *const OcxModel,
    x: *const f64,
    d: usize,
    relevance: *mut f64,
    total: *mut f64,
) -> OcxStatus {
    guard(|| {
        let m = model_ref(model)?;
        let x = slice(x, d, "x")?;
        let hm = ocx::input_relevance(m, x)?;
        slice_mut(relevance, d, "relevance")?.copy_from_slice(&hm.r);
        if !total.is_null() {
            *total = hm.total;
        }
        Ok(())
    })
}

/// Relevance of each support vector for the inlierness. Writes
/// `ocx_model_num_sv` values, `m` must equal that count.
///
/// # Safety
/// `x` must point to `d` doubles and `relevance` to `m`.
#[no_mangle]
pub unsafe extern "C" fn ocx_explain_inlier(
    model: *const OcxModel,
    x: *const f64,
    d: usize,
    relevance: *mut f64,
    m: usize,
) -> OcxStatus {
    guard(|| {
        let model = model_ref(model)?;
        if m != model.m() {
            return Err(Fail(
                OcxStatus::ShapeMismatch,
                format!(
                    "relevance buffer holds {m} values, model has {} support vectors",
                    model.m()
                ),
            ));
        }
        let x = slice(x, d, "x")?;
        let rel = ocx::explain_inlier(model, x)?;
        slice_mut(relevance, m, "relevance")?.copy_from_slice(&rel.r);
        Ok(())
    })
}

/// Message of the last failed call on this thread, empty after a success.
#[no_mangle]
pub extern "C" fn ocx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
