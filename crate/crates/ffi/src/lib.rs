//! C ABI over the gap-estimation pipeline.
//!
//! Opaque handles own the Rust objects; every entry point returns a status
//! code and writes results through out-pointers. The last error message per
//! thread is retrievable as a C string. The generated header lands in
//! `include/qpde.h`.
//!
//! ```c
//! QpdeConfig *cfg = qpde_config_new();
//! qpde_config_set(cfg, "n_sites", "2");
//! qpde_config_set(cfg, "exact_prep", "true");
//! qpde_config_set(cfg, "exact_evolution", "true");
//! qpde_config_set(cfg, "shots", "exact");
//! double gap;
//! if (qpde_run(cfg, "out_dir", &gap) == QPDE_STATUS_OK)
//!     printf("gap %.9f\n", gap);
//! qpde_config_free(cfg);
//! ```

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use qpde_core::config::RunConfig;
use qpde_core::error::QpdeError;
use qpde_core::pipeline::run_pipeline;
use qpde_core::signal::{SeriesMeta, StopReason, TimeSeries};
use qpde_core::spectral::estimate_gap;

/// Status codes mirroring the CLI exit conventions.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum QpdeStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, or malformed argument.
    InvalidArgument = 1,
    /// Configuration rejected by validation.
    InvalidConfig = 2,
    /// Desk-scale resource bound exceeded.
    ResourceLimit = 3,
    /// Any other failure; see `qpde_last_error`.
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &QpdeError) -> QpdeStatus {
    match e {
        QpdeError::InvalidConfig(_) => QpdeStatus::InvalidConfig,
        QpdeError::ResourceLimit(_) => QpdeStatus::ResourceLimit,
        _ => QpdeStatus::Internal,
    }
}

/// Opaque run configuration.
pub struct QpdeConfig {
    inner: RunConfig,
}

/// New configuration with the default study parameters. Free with
/// `qpde_config_free`.
#[no_mangle]
pub extern "C" fn qpde_config_new() -> *mut QpdeConfig {
    Box::into_raw(Box::new(QpdeConfig { inner: RunConfig::default() }))
}

/// # Safety
/// `cfg` must come from `qpde_config_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qpde_config_free(cfg: *mut QpdeConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

/// Set one configuration key from its textual form (same keys as the config
/// file, e.g. `qpde_config_set(cfg, "dt", "0.1")`).
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qpde_config_set(
    cfg: *mut QpdeConfig,
    key: *const c_char,
    value: *const c_char,
) -> QpdeStatus {
    let Some(cfg) = cfg.as_mut() else {
        set_error("null config");
        return QpdeStatus::InvalidArgument;
    };
    let (Some(k), Some(v)) = (cstr(key), cstr(value)) else {
        set_error("key/value must be valid UTF-8");
        return QpdeStatus::InvalidArgument;
    };
    match cfg.inner.set(k, v) {
        Ok(()) => QpdeStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Serialize the configuration into `buf` (NUL-terminated, truncated to
/// `cap`); returns the full length needed.
///
/// # Safety
/// `cfg` must be live; `buf` must have space for `cap` bytes when non-null.
#[no_mangle]
pub unsafe extern "C" fn qpde_config_serialize(
    cfg: *const QpdeConfig,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    let Some(cfg) = cfg.as_ref() else { return 0 };
    let text = cfg.inner.serialize();
    let bytes = text.as_bytes();
    if !buf.is_null() && cap > 0 {
        let n = bytes.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
        *buf.add(n) = 0;
    }
    bytes.len()
}

/// Run the full pipeline; outputs land in `out_dir` and the estimated gap in
/// `*gap_out`.
///
/// # Safety
/// `cfg` must be live; `out_dir` NUL-terminated; `gap_out` writable or null.
#[no_mangle]
pub unsafe extern "C" fn qpde_run(
    cfg: *const QpdeConfig,
    out_dir: *const c_char,
    gap_out: *mut f64,
) -> QpdeStatus {
    let Some(cfg) = cfg.as_ref() else {
        set_error("null config");
        return QpdeStatus::InvalidArgument;
    };
    let Some(dir) = cstr(out_dir) else {
        set_error("out_dir must be valid UTF-8");
        return QpdeStatus::InvalidArgument;
    };
    let mut run_cfg = cfg.inner.clone();
    run_cfg.out_dir = dir.to_string();
    let result = catch_unwind(AssertUnwindSafe(|| run_pipeline(&run_cfg)));
    match result {
        Ok(Ok(report)) => {
            if !gap_out.is_null() {
                *gap_out = report.gap_estimate;
            }
            QpdeStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            QpdeStatus::Internal
        }
    }
}

/// Reference gap of the configured model by exact diagonalization.
///
/// # Safety
/// `cfg` must be live; `gap_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpde_reference_gap(
    cfg: *const QpdeConfig,
    gap_out: *mut f64,
) -> QpdeStatus {
    let Some(cfg) = cfg.as_ref() else {
        set_error("null config");
        return QpdeStatus::InvalidArgument;
    };
    if gap_out.is_null() {
        set_error("null gap_out");
        return QpdeStatus::InvalidArgument;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        qpde_core::pipeline::Pipeline::new(cfg.inner.clone())?.reference_gap()
    }));
    match result {
        Ok(Ok(gap)) => {
            *gap_out = gap;
            QpdeStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            QpdeStatus::Internal
        }
    }
}

/// Estimate the dominant frequency of a complex time series sampled at
/// steps `1..=len` with spacing `dt`. Writes the frequency, the shared decay
/// rate, and the fit residual through the out-pointers (each may be null).
///
/// # Safety
/// `re` and `im` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn qpde_estimate_gap(
    dt: f64,
    re: *const f64,
    im: *const f64,
    len: usize,
    gap_out: *mut f64,
    alpha_out: *mut f64,
    residual_out: *mut f64,
) -> QpdeStatus {
    if re.is_null() || im.is_null() || len == 0 {
        set_error("null or empty series");
        return QpdeStatus::InvalidArgument;
    }
    if !(dt.is_finite() && dt > 0.0) {
        set_error("dt must be positive");
        return QpdeStatus::InvalidConfig;
    }
    let res = std::slice::from_raw_parts(re, len);
    let ims = std::slice::from_raw_parts(im, len);
    let samples: Vec<(usize, Complex64)> = res
        .iter()
        .zip(ims)
        .enumerate()
        .map(|(i, (&a, &b))| (i + 1, Complex64::new(a, b)))
        .collect();
    let ts = TimeSeries {
        dt,
        samples,
        a0sq: 0.5,
        meta: SeriesMeta { shots: None, p_step: 0.0, stop_reason: StopReason::MaxSteps },
    };
    let result = catch_unwind(AssertUnwindSafe(|| estimate_gap(&ts)));
    match result {
        Ok(Ok((gap, est))) => {
            if !gap_out.is_null() {
                *gap_out = gap;
            }
            if !alpha_out.is_null() {
                *alpha_out = est.alpha;
            }
            if !residual_out.is_null() {
                *residual_out = est.residual;
            }
            QpdeStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            QpdeStatus::Internal
        }
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`); returns the full message length.
///
/// # Safety
/// `buf` must have space for `cap` bytes when non-null.
#[no_mangle]
pub unsafe extern "C" fn qpde_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn qpde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_set_and_serialize_roundtrip() {
        let cfg = qpde_config_new();
        unsafe {
            let k = CString::new("dt").unwrap();
            let v = CString::new("0.1").unwrap();
            assert!(qpde_config_set(cfg, k.as_ptr(), v.as_ptr()) == QpdeStatus::Ok);
            let bad = CString::new("nonsense").unwrap();
            assert!(qpde_config_set(cfg, bad.as_ptr(), v.as_ptr()) == QpdeStatus::InvalidConfig);
            let mut buf = vec![0i8; 4096];
            let n = qpde_config_serialize(cfg, buf.as_mut_ptr(), buf.len());
            assert!(n > 0 && n < 4096);
            let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
            assert!(text.contains("dt = 0.1"));
            qpde_config_free(cfg);
        }
    }

    #[test]
    fn estimate_gap_on_synthetic_signal() {
        let dt = 0.05;
        let delta = 0.254;
        let n = 50;
        let re: Vec<f64> = (1..=n).map(|r| (delta * dt * r as f64).cos()).collect();
        let im: Vec<f64> = (1..=n).map(|r| -(delta * dt * r as f64).sin()).collect();
        let mut gap = 0.0;
        let mut alpha = f64::NAN;
        let mut residual = f64::NAN;
        let st = unsafe {
            qpde_estimate_gap(
                dt,
                re.as_ptr(),
                im.as_ptr(),
                n,
                &mut gap,
                &mut alpha,
                &mut residual,
            )
        };
        assert!(st == QpdeStatus::Ok);
        assert!((gap - delta).abs() < 1e-8, "gap {gap}");
        assert!(alpha.abs() < 1e-8);
        assert!(residual < 1e-16);
    }

    #[test]
    fn error_paths_report_messages() {
        let st = unsafe {
            qpde_estimate_gap(0.05, std::ptr::null(), std::ptr::null(), 0, std::ptr::null_mut(), std::ptr::null_mut(), std::ptr::null_mut())
        };
        assert!(st == QpdeStatus::InvalidArgument);
        let mut buf = vec![0i8; 256];
        let n = unsafe { qpde_last_error(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
    }

    #[test]
    fn reference_gap_through_the_abi() {
        let cfg = qpde_config_new();
        unsafe {
            let set = |k: &str, v: &str| {
                let k = CString::new(k).unwrap();
                let v = CString::new(v).unwrap();
                assert!(qpde_config_set(cfg, k.as_ptr(), v.as_ptr()) == QpdeStatus::Ok);
            };
            set("n_sites", "4");
            let mut gap = 0.0;
            assert!(qpde_reference_gap(cfg, &mut gap) == QpdeStatus::Ok);
            assert!((gap - 0.254).abs() < 1e-3, "gap {gap}");
            qpde_config_free(cfg);
        }
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(qpde_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }
}
