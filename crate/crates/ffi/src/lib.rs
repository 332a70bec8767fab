//! C ABI over `infsample`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style calls and released with the matching `*_free`. Every fallible call
//! returns an [`InfsStatus`]; on failure a message for the calling thread is
//! available from [`infs_last_error`]. Panics are caught and reported as
//! `INFS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use infsample::data::{self, Dataset};
use infsample::design::{self, SampleDraw};
use infsample::fit::{fit_weighted, FitOptions, FitResult};
use infsample::influence::{importance_scores, ImportanceScheme, SchemeKind};
use infsample::{Error, Family};
use nalgebra::DVector;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    InvalidResponse = 6,
    IncompatibleScheme = 7,
    InfeasibleBudget = 8,
    EmptySample = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Model family selector; `tau` arguments are read only for `INFS_FAMILY_QUANTILE`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfsFamily {
    Ols = 0,
    Logistic = 1,
    Poisson = 2,
    Quantile = 3,
}

/// Opaque dataset handle.
pub struct InfsDataset(Dataset);

/// Opaque fit handle.
pub struct InfsFit(FitResult);

/// Opaque Poisson draw handle.
pub struct InfsDraw(SampleDraw);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> InfsStatus {
    match err {
        Error::Io(_) => InfsStatus::Io,
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) | Error::MissingColumn(_) => InfsStatus::Parse,
        Error::DimensionMismatch(_) | Error::InvalidShape(_) | Error::EmptyData | Error::PilotTooSmall { .. } => {
            InfsStatus::DimensionMismatch
        }
        Error::InvalidResponse(_) => InfsStatus::InvalidResponse,
        Error::IncompatibleScheme { .. } => InfsStatus::IncompatibleScheme,
        Error::InfeasibleBudget { .. } | Error::DegenerateSizes | Error::ZeroProbabilityWithMass(_) => {
            InfsStatus::InfeasibleBudget
        }
        Error::EmptySample => InfsStatus::EmptySample,
        _ => InfsStatus::InvalidArgument,
    }
}

struct Fail(InfsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(InfsStatus::NullPointer, format!("`{what}` is null"))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> InfsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            InfsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            InfsStatus::Panic
        }
    }
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

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(InfsStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn family(kind: InfsFamily, tau: f64) -> Result<Family, Fail> {
    Ok(match kind {
        InfsFamily::Ols => Family::Ols,
        InfsFamily::Logistic => Family::Logistic,
        InfsFamily::Poisson => Family::Poisson,
        InfsFamily::Quantile => Family::quantile(tau)?,
    })
}

fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            InfsStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    let dst = unsafe { slice_mut(out, src.len(), "out")? };
    dst.copy_from_slice(src);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn infs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn infs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a dataset from row-major `x` (`n * d` values) and `y` (`n` values).
///
/// # Safety
/// `x` and `y` must point to at least `n * d` and `n` readable doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn infs_dataset_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut InfsDataset,
) -> InfsStatus {
    guard(|| {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(InfsStatus::InvalidArgument, "n * d overflows".into()))?;
        let x = slice(x, len, "x")?;
        let y = slice(y, n, "y")?;
        let rows: Vec<Vec<f64>> = if d == 0 { Vec::new() } else { x.chunks(d).map(<[f64]>::to_vec).collect() };
        let ds = Dataset::from_rows(&rows, y)?;
        store(out, InfsDataset(ds))
    })
}

/// Load a numeric CSV. `response` names the y column; with `add_intercept` a
/// leading column of ones is added.
///
/// # Safety
/// `path` and `response` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn infs_dataset_load_csv(
    path: *const c_char,
    response: *const c_char,
    add_intercept: bool,
    out: *mut *mut InfsDataset,
) -> InfsStatus {
    guard(|| {
        let path = string(path, "path")?;
        let response = string(response, "response")?;
        let ds = data::load_csv(path, response, &[])?;
        store(out, InfsDataset(if add_intercept { ds.with_intercept() } else { ds }))
    })
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn infs_dataset_rows(ds: *const InfsDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// Number of predictor columns, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn infs_dataset_cols(ds: *const InfsDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.d())
}

/// # Safety
/// `ds` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn infs_dataset_free(ds: *mut InfsDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Weighted fit. `weights` may be null for unit weights, otherwise it holds one
/// value per row.
///
/// # Safety
/// `ds` must be a live handle, `weights` null or `rows` readable doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn infs_fit(
    ds: *const InfsDataset,
    weights: *const f64,
    kind: InfsFamily,
    tau: f64,
    out: *mut *mut InfsFit,
) -> InfsStatus {
    guard(|| {
        let ds = &handle(ds, "ds")?.0;
        let w = if weights.is_null() {
            vec![1.0; ds.n()]
        } else {
            slice(weights, ds.n(), "weights")?.to_vec()
        };
        let fit = fit_weighted(ds.x(), ds.y(), &w, family(kind, tau)?, &FitOptions::default())?;
        store(out, InfsFit(fit))
    })
}

/// Number of coefficients, or 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infs_fit_dim(fit: *const InfsFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.theta.len())
}

/// Copy the coefficients into `out` (capacity `len`).
///
/// # Safety
/// `fit` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn infs_fit_theta(fit: *const InfsFit, out: *mut f64, len: usize) -> InfsStatus {
    guard(|| copy_out(handle(fit, "fit")?.0.theta.as_slice(), out, len))
}

/// Whether the solver met its convergence criterion; false for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infs_fit_converged(fit: *const InfsFit) -> bool {
    fit.as_ref().is_some_and(|f| f.0.converged)
}

/// Final weighted objective, NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infs_fit_objective(fit: *const InfsFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.objective)
}

/// # Safety
/// `fit` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn infs_fit_free(fit: *mut InfsFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Importance sizes for every row of `ds`. `scheme` is a scheme name such as
/// `"influence-coef"`; `theta` holds the pilot coefficients (`cols` values);
/// `pilot` may be null, otherwise curvature is estimated on its rows. Writes
/// `rows` values to `out`.
///
/// # Safety
/// Handles must be live or null where allowed; `theta` readable for `theta_len`
/// doubles and `out` writable for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn infs_importance_scores(
    ds: *const InfsDataset,
    pilot: *const InfsDataset,
    scheme: *const c_char,
    kind: InfsFamily,
    tau: f64,
    theta: *const f64,
    theta_len: usize,
    out: *mut f64,
    out_len: usize,
) -> InfsStatus {
    guard(|| {
        let ds = &handle(ds, "ds")?.0;
        let pilot = pilot.as_ref().map(|p| &p.0);
        let kind_name = string(scheme, "scheme")?;
        let scheme_kind: SchemeKind = kind_name.parse()?;
        let theta = DVector::from_column_slice(slice(theta, theta_len, "theta")?);
        let sizes = importance_scores(ds, &ImportanceScheme::new(scheme_kind), family(kind, tau)?, &theta, pilot)?;
        copy_out(&sizes, out, out_len)
    })
}

/// Inclusion probabilities `min(1, max(alpha, c * size))` summing to `m`.
/// Writes `n` probabilities to `pi_out` and, if non-null, `c` to `scale_out`.
///
/// # Safety
/// `sizes` readable and `pi_out` writable for `n` doubles; `scale_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn infs_allocate(
    sizes: *const f64,
    n: usize,
    m: f64,
    alpha: f64,
    pi_out: *mut f64,
    scale_out: *mut f64,
) -> InfsStatus {
    guard(|| {
        let d = design::allocate(slice(sizes, n, "sizes")?, m, alpha)?;
        copy_out(&d.pi, pi_out, n)?;
        if !scale_out.is_null() {
            *scale_out = d.scale;
        }
        Ok(())
    })
}

/// Poisson sample from the probabilities `pi` (`n` values) with the given seed.
///
/// # Safety
/// `pi` readable for `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn infs_poisson_draw(pi: *const f64, n: usize, seed: u64, out: *mut *mut InfsDraw) -> InfsStatus {
    guard(|| {
        let pi = slice(pi, n, "pi")?;
        if let Some(p) = pi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Fail(InfsStatus::InvalidArgument, format!("probability {p} outside [0, 1]")));
        }
        let d = design::SamplingDesign {
            pi: pi.to_vec(),
            m: pi.iter().sum(),
            alpha: 0.0,
            scale: 0.0,
        };
        store(out, InfsDraw(design::poisson_draw(&d, seed)))
    })
}

/// Number of sampled rows, or 0 for a null handle.
///
/// # Safety
/// `draw` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn infs_draw_size(draw: *const InfsDraw) -> usize {
    draw.as_ref().map_or(0, |d| d.0.realized_size)
}

/// Copy the sampled row indices (ascending) into `out` (capacity `len`).
///
/// # Safety
/// `draw` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn infs_draw_indices(draw: *const InfsDraw, out: *mut usize, len: usize) -> InfsStatus {
    guard(|| {
        let idx = &handle(draw, "draw")?.0.indices;
        if len < idx.len() {
            return Err(Fail(
                InfsStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", idx.len()),
            ));
        }
        if !idx.is_empty() {
            if out.is_null() {
                return Err(null("out"));
            }
            ptr::copy_nonoverlapping(idx.as_ptr(), out, idx.len());
        }
        Ok(())
    })
}

/// Copy the inverse-probability weights `1 / pi_i` of the sampled rows into `out`.
///
/// # Safety
/// `draw` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn infs_draw_weights(draw: *const InfsDraw, out: *mut f64, len: usize) -> InfsStatus {
    guard(|| copy_out(&handle(draw, "draw")?.0.weights, out, len))
}

/// # Safety
/// `draw` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn infs_draw_free(draw: *mut InfsDraw) {
    if !draw.is_null() {
        drop(Box::from_raw(draw));
    }
}

/// `n^-2 sum size_i^2 (1 - pi_i) / pi_i` into `out`.
///
/// # Safety
/// `sizes` and `pi` readable for `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn infs_design_variance(sizes: *const f64, pi: *const f64, n: usize, out: *mut f64) -> InfsStatus {
    guard(|| {
        let v = design::variance_for(slice(sizes, n, "sizes")?, slice(pi, n, "pi")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v;
        Ok(())
    })
}
