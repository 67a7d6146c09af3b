//! C ABI for sparfilter.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an [`SfStatus`];
//! on failure [`sf_last_error`] describes the problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sparfilter::covariance::log_returns;
use sparfilter::filter::{CostSpec, FilterOptions, FilterResult, Scale, TargetChoice};
use sparfilter::shrinkage::{ledoit_wolf, ledoit_wolf_correlation, NercomeParams};
use sparfilter::spectral::{Band, DistanceSpec, Metric};
use sparfilter::{DataMatrix, Error};

/// Observation matrix, `n` rows by `p` columns.
pub struct SfData(DataMatrix);

/// Output of [`sf_filter_run`].
pub struct SfFilterResult(FilterResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfScale {
    Correlation = 0,
    Covariance = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfMetric {
    Minkowski = 0,
    LInfinity = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfCostForm {
    Power = 0,
    WeightRatio = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfTarget {
    LedoitWolf = 0,
    Nercome = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfMatrixWhich {
    Sample = 0,
    Maximal = 1,
    Tuned = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfFilterConfig {
    pub scale: SfScale,
    pub metric: SfMetric,
    /// Minkowski exponent, >= 1. Ignored for `LInfinity`.
    pub kappa: f64,
    /// 1-based inclusive eigenvalue band; `band_low == 0` means the full spectrum.
    pub band_low: usize,
    pub band_high: usize,
    /// Non-zero: use the eigenvalues above the Marchenko-Pastur edge.
    pub mp_band: i32,
    pub cost_form: SfCostForm,
    pub theta1: f64,
    pub theta2: f64,
    /// Scale for `WeightRatio`.
    pub cost_scale: f64,
    pub target: SfTarget,
    pub nercome_splits: usize,
    pub nercome_fraction: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SfStatus {
    match err {
        Error::Io { .. } | Error::Stream(_) => SfStatus::Io,
        Error::InvalidBand { .. }
        | Error::InvalidParameter(_)
        | Error::SplitTooSmall { .. }
        | Error::LengthMismatch { .. }
        | Error::InsufficientDimensions { .. } => SfStatus::InvalidArgument,
        Error::DecompositionFailure | Error::NoDeviatingEigenvalues { .. } | Error::NotPsd { .. } => {
            SfStatus::Numerical
        }
        _ => SfStatus::InvalidData,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard<F: FnOnce() -> Result<(), (SfStatus, String)>>(f: F) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(name: &str) -> (SfStatus, String) {
    (SfStatus::NullPointer, format!("{name} is null"))
}

fn labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("X{i}")).collect()
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: correlation scale, Ledoit-Wolf target, Euclidean distance over
/// the full spectrum, no cost.
#[no_mangle]
pub extern "C" fn sf_filter_config_default() -> SfFilterConfig {
    SfFilterConfig {
        scale: SfScale::Correlation,
        metric: SfMetric::Minkowski,
        kappa: 2.0,
        band_low: 0,
        band_high: 0,
        mp_band: 0,
        cost_form: SfCostForm::Power,
        theta1: 0.0,
        theta2: 2.0,
        cost_scale: 1.0,
        target: SfTarget::LedoitWolf,
        nercome_splits: 50,
        nercome_fraction: 0.5,
        seed: 0,
    }
}

/// Copies `n * p` row-major values into a new data handle.
///
/// # Safety
/// `values` must point to `n * p` readable doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn sf_data_from_buffer(
    values: *const f64,
    n: usize,
    p: usize,
    out: *mut *mut SfData,
) -> SfStatus {
    guard(|| {
        if values.is_null() {
            return Err(null_err("values"));
        }
        if out.is_null() {
            return Err(null_err("out"));
        }
        let len = n.checked_mul(p).ok_or((SfStatus::InvalidArgument, "n * p overflows".to_string()))?;
        let slice = std::slice::from_raw_parts(values, len);
        let d = DataMatrix::from_row_slice(n, p, slice, labels(p)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SfData(d)));
        Ok(())
    })
}

/// Reads a labelled CSV. With `log_returns != 0` the columns are treated as
/// prices and converted to log returns.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_data_from_csv(
    path: *const c_char,
    log_returns_flag: i32,
    out: *mut *mut SfData,
) -> SfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null_err("path"));
        }
        if out.is_null() {
            return Err(null_err("out"));
        }
        let path =
            CStr::from_ptr(path).to_str().map_err(|_| (SfStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let mut d = DataMatrix::read_csv_path(Path::new(path)).map_err(lib_err)?;
        if log_returns_flag != 0 {
            d = log_returns(&d).map_err(lib_err)?;
        }
        *out = Box::into_raw(Box::new(SfData(d)));
        Ok(())
    })
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_data_n(data: *const SfData) -> usize {
    data.as_ref().map_or(0, |d| d.0.n())
}

/// Number of columns, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_data_p(data: *const SfData) -> usize {
    data.as_ref().map_or(0, |d| d.0.p())
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_data_free(data: *mut SfData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

fn to_options(c: &SfFilterConfig) -> Result<(DistanceSpec, CostSpec, FilterOptions), (SfStatus, String)> {
    let metric = match c.metric {
        SfMetric::Minkowski => Metric::minkowski(c.kappa).map_err(lib_err)?,
        SfMetric::LInfinity => Metric::LInfinity,
    };
    let band = (c.band_low != 0).then(|| Band::new(c.band_low, c.band_high));
    let cost = match c.cost_form {
        SfCostForm::Power => CostSpec::power(c.theta1, c.theta2),
        SfCostForm::WeightRatio => CostSpec::weight_ratio(c.cost_scale),
    }
    .map_err(lib_err)?;
    let target = match c.target {
        SfTarget::LedoitWolf => TargetChoice::LedoitWolf,
        SfTarget::Nercome => TargetChoice::Nercome(NercomeParams {
            split_fraction: c.nercome_fraction,
            n_splits: c.nercome_splits,
            seed: c.seed,
        }),
    };
    let scale = match c.scale {
        SfScale::Correlation => Scale::Correlation,
        SfScale::Covariance => Scale::Covariance,
    };
    Ok((DistanceSpec::new(metric, band), cost, FilterOptions { scale, target, mp_band: c.mp_band != 0 }))
}

/// Runs the filter. A null `config` uses [`sf_filter_config_default`].
///
/// # Safety
/// `data` must be a live handle, `config` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_filter_run(
    data: *const SfData,
    config: *const SfFilterConfig,
    out: *mut *mut SfFilterResult,
) -> SfStatus {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null_err("data"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let config = config.as_ref().copied().unwrap_or_else(|| sf_filter_config_default());
        let (dspec, cost, options) = to_options(&config)?;
        let r = sparfilter::run_filter(&d.0, &dspec, &cost, &options).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SfFilterResult(r)));
        Ok(())
    })
}

/// Maximal-filter threshold; NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_eta_star(result: *const SfFilterResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.eta_star)
}

/// Tuned-filter threshold; NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_eta_tilde(result: *const SfFilterResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.eta_tilde)
}

/// Edges deleted by the maximal filter.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_y_star(result: *const SfFilterResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.y_star)
}

/// Edges deleted by the tuned filter.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_y_tilde(result: *const SfFilterResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.y_tilde)
}

/// Spectral distance at the maximal threshold.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_distance_star(result: *const SfFilterResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.distance_star)
}

/// Spectral distance at the tuned threshold.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_distance_tilde(result: *const SfFilterResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.distance_tilde)
}

/// Matrix dimension.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_p(result: *const SfFilterResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.sample.dim())
}

/// Non-zero off-diagonal pairs of the unfiltered matrix.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_result_total_edges(result: *const SfFilterResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.table.total_edges)
}

/// Copies a `p * p` matrix (symmetric, so row- and column-major agree) into `buf`.
///
/// # Safety
/// `result` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_result_copy_matrix(
    result: *const SfFilterResult,
    which: SfMatrixWhich,
    buf: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(|| null_err("result"))?.0;
        let m = match which {
            SfMatrixWhich::Sample => &r.sample,
            SfMatrixWhich::Maximal => &r.matrix_star,
            SfMatrixWhich::Tuned => &r.matrix_tilde,
        };
        copy_out(m.entries().as_slice(), buf, len)
    })
}

/// Copies the descending target spectrum (`p` values) into `buf`.
///
/// # Safety
/// `result` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_result_copy_target_spectrum(
    result: *const SfFilterResult,
    buf: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(|| null_err("result"))?.0;
        copy_out(r.target.values(), buf, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (SfStatus, String)> {
    if buf.is_null() {
        return Err(null_err("buf"));
    }
    if len < src.len() {
        return Err((SfStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sf_result_free(result: *mut SfFilterResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Ledoit-Wolf weights `alpha1` (identity) and `alpha2` (sample). With
/// `correlation != 0` they are computed on the correlation scale.
///
/// # Safety
/// `data` must be a live handle; `alpha1` and `alpha2` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_ledoit_wolf(
    data: *const SfData,
    correlation: i32,
    alpha1: *mut f64,
    alpha2: *mut f64,
) -> SfStatus {
    guard(|| {
        let d = &data.as_ref().ok_or_else(|| null_err("data"))?.0;
        if alpha1.is_null() || alpha2.is_null() {
            return Err(null_err("alpha"));
        }
        let lw = if correlation != 0 { ledoit_wolf_correlation(d) } else { ledoit_wolf(d) }.map_err(lib_err)?;
        *alpha1 = lw.alpha1;
        *alpha2 = lw.alpha2;
        Ok(())
    })
}
