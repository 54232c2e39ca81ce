//! C ABI over the roughloop library.
//!
//! Objects cross the boundary as opaque handles created by `rl_*_new`-style
//! functions and released by the matching `rl_*_free`. Every fallible call
//! returns an `RlStatus`; on failure a message is kept per thread and can be
//! read with `rl_last_error`. Panics are caught and reported as
//! `RL_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use roughloop::experiments::{run_with_workers, to_csv, ExperimentConfig};
use roughloop::geometry::endpoint_distance;
use roughloop::lie::Group;
use roughloop::lift::{ibp_defect, lift};
use roughloop::paths::{path_besov_norm, SampledPath};
use roughloop::sampler::{sample_brownian, SeededStream};
use roughloop::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Shape = 3,
    CutLocus = 4,
    Config = 5,
    UnknownExperiment = 6,
    Utf8 = 7,
    Internal = 99,
}

/// Opaque sampled path.
pub struct RlPath(SampledPath);

/// Opaque validated experiment configuration.
pub struct RlConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::InvalidParams(_) | Error::OutsideTube | Error::NotClosed(_) | Error::OutsideDomain => {
            RlStatus::InvalidParams
        }
        Error::LevelMismatch(..)
        | Error::DimMismatch(..)
        | Error::BeyondResolution { .. }
        | Error::NonZeroStart
        | Error::BadLength { .. }
        | Error::EmptyGrid
        | Error::GridTooLarge(_)
        | Error::NonIdentityStart => RlStatus::Shape,
        Error::CutLocus { .. } => RlStatus::CutLocus,
        Error::UnknownExperiment(_) => RlStatus::UnknownExperiment,
        Error::Config(_) => RlStatus::Config,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RlStatus>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            RlStatus::Internal
        }
    }
}

fn lib<T>(r: roughloop::Result<T>) -> Result<T, RlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T) -> Result<(), RlStatus> {
    if p.is_null() {
        set_error("null pointer argument".into());
        Err(RlStatus::NullPointer)
    } else {
        Ok(())
    }
}

unsafe fn cstr<'a>(p: *const c_char) -> Result<&'a str, RlStatus> {
    non_null(p)?;
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        RlStatus::Utf8
    })
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Brownian path of dimension `dim` on 2^level cells from (seed, stream).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn rl_path_brownian(
    dim: usize,
    level: u32,
    seed: u64,
    stream: u64,
    out: *mut *mut RlPath,
) -> RlStatus {
    guard(|| {
        non_null(out)?;
        if dim == 0 || level > 20 {
            set_error(format!("need dim >= 1 and level <= 20, got {dim}, {level}"));
            return Err(RlStatus::InvalidParams);
        }
        let p = sample_brownian(dim, level, &SeededStream::new(seed, stream));
        *out = Box::into_raw(Box::new(RlPath(p)));
        Ok(())
    })
}

/// Path from `len` = dim·(2^level + 1) grid values, point-major.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rl_path_from_values(
    dim: usize,
    level: u32,
    values: *const f64,
    len: usize,
    out: *mut *mut RlPath,
) -> RlStatus {
    guard(|| {
        non_null(values)?;
        non_null(out)?;
        if level > 20 {
            set_error(format!("level {level} too large"));
            return Err(RlStatus::InvalidParams);
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let p = lib(SampledPath::new(dim, level, v))?;
        *out = Box::into_raw(Box::new(RlPath(p)));
        Ok(())
    })
}

/// Releases a path; NULL is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rl_path_free(p: *mut RlPath) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of stored doubles, dim·(2^level + 1); 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rl_path_len(p: *const RlPath) -> usize {
    p.as_ref().map_or(0, |p| p.0.values().len())
}

/// Copies the grid values into `buf`, which must hold `rl_path_len` doubles.
///
/// # Safety
/// `p` must be a live handle and `buf` writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn rl_path_values(p: *const RlPath, buf: *mut f64, cap: usize) -> RlStatus {
    guard(|| {
        non_null(p)?;
        non_null(buf)?;
        let v = (*p).0.values();
        if cap < v.len() {
            set_error(format!("buffer holds {cap} doubles, need {}", v.len()));
            return Err(RlStatus::InvalidParams);
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// ‖x‖_{m,θ} of a path (all components jointly).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_besov_norm(p: *const RlPath, m: u32, theta: f64, out: *mut f64) -> RlStatus {
    guard(|| {
        non_null(p)?;
        non_null(out)?;
        *out = lib(path_besov_norm(&(*p).0, m, theta))?;
        Ok(())
    })
}

/// Largest grid defect of the integration-by-parts identity of the lift.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_lift_ibp_defect(p: *const RlPath, out: *mut f64) -> RlStatus {
    guard(|| {
        non_null(p)?;
        non_null(out)?;
        *out = ibp_defect(&lift(&(*p).0));
        Ok(())
    })
}

/// d(X(1,e,w), e) for the flow driven by a 3-dimensional path on SO(3).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_so3_endpoint_distance(p: *const RlPath, out: *mut f64) -> RlStatus {
    guard(|| {
        non_null(p)?;
        non_null(out)?;
        *out = lib(endpoint_distance(Group::So3, &(*p).0))?;
        Ok(())
    })
}

/// Parses and validates config text (key = value lines with [besov] and
/// [params] sections).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_config_parse(text: *const c_char, out: *mut *mut RlConfig) -> RlStatus {
    guard(|| {
        non_null(out)?;
        let t = cstr(text)?;
        match ExperimentConfig::parse(t) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(RlConfig(c)));
                Ok(())
            }
            Err(errs) => {
                let unknown = errs.iter().any(|e| e.starts_with("unknown experiment"));
                set_error(errs.join("; "));
                Err(if unknown { RlStatus::UnknownExperiment } else { RlStatus::Config })
            }
        }
    })
}

/// Releases a config; NULL is ignored.
///
/// # Safety
/// `c` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rl_config_free(c: *mut RlConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs the experiment and returns its CSV document in `*out`, to be released
/// with `rl_string_free`. `*all_pass` is set to 1 when every check passed.
///
/// # Safety
/// `c` must be a live handle; `out` and `all_pass` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_run_csv(
    c: *const RlConfig,
    workers: usize,
    zero_time: bool,
    out: *mut *mut c_char,
    all_pass: *mut i32,
) -> RlStatus {
    guard(|| {
        non_null(c)?;
        non_null(out)?;
        non_null(all_pass)?;
        let cfg = &(*c).0;
        let o = lib(run_with_workers(cfg, workers))?;
        let doc = lib(to_csv(cfg, &o, zero_time))?;
        *all_pass = i32::from(o.all_pass());
        *out = CString::new(doc).map_err(|_| RlStatus::Internal)?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
