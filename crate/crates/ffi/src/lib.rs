//! C ABI over the `emrt` library.
//!
//! Objects cross the boundary as opaque handles created by `emrt_*_new` style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns an [`EmrtStatus`]; on failure the message is kept per thread and
//! can be read with [`emrt_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use emrt::cli::parse_scenario;
use emrt::dispersion::Medium;
use emrt::linalg::V3;
use emrt::media::Spectrum;
use emrt::rte_mc::{run_simulation, PhaseSpaceHistogram};
use emrt::scattering::lorentz_total;
use emrt::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmrtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigInvalid = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque medium handle.
pub struct EmrtMedium {
    inner: Medium,
}

/// Opaque phase-space histogram handle.
pub struct EmrtHistogram {
    inner: PhaseSpaceHistogram,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> EmrtStatus {
    match err {
        Error::ConfigInvalid { .. } => EmrtStatus::ConfigInvalid,
        Error::Io(_) => EmrtStatus::Io,
        Error::InvalidArgument(_) | Error::ZeroWaveVector | Error::ChiralityOutOfRange(_) | Error::EmptyInput => {
            EmrtStatus::InvalidArgument
        }
        _ => EmrtStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EmrtStatus, String)>) -> EmrtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EmrtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EmrtStatus::Panic
        }
    }
}

fn lift(err: Error) -> (EmrtStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (EmrtStatus, String) {
    (EmrtStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(msg: &str) -> (EmrtStatus, String) {
    (EmrtStatus::InvalidArgument, msg.to_string())
}

unsafe fn read_v3(p: *const f64, what: &str) -> Result<V3, (EmrtStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(V3::new(s[0], s[1], s[2]))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn emrt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn emrt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Homogeneous isotropic medium.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn emrt_medium_isotropic(
    permittivity: f64,
    permeability: f64,
    out: *mut *mut EmrtMedium,
) -> EmrtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = Medium::isotropic(permittivity, permeability).map_err(lift)?;
        *out = Box::into_raw(Box::new(EmrtMedium { inner: m }));
        Ok(())
    })
}

/// Homogeneous chiral medium with `|kappa| < 1`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn emrt_medium_chiral(
    permittivity: f64,
    permeability: f64,
    kappa: f64,
    out: *mut *mut EmrtMedium,
) -> EmrtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = Medium::chiral(permittivity, permeability, kappa).map_err(lift)?;
        *out = Box::into_raw(Box::new(EmrtMedium { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `medium` must be null or a handle from an `emrt_medium_*` constructor that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn emrt_medium_free(medium: *mut EmrtMedium) {
    if !medium.is_null() {
        drop(Box::from_raw(medium));
    }
}

/// Number of distinct dispersion branches, null branch included.
///
/// # Safety
/// `medium` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn emrt_medium_mode_count(medium: *const EmrtMedium, out: *mut usize) -> EmrtStatus {
    guard(|| {
        let m = medium.as_ref().ok_or_else(|| null("medium"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.inner.branch_count().ok_or_else(|| invalid("medium has no closed-form branch count"))?;
        Ok(())
    })
}

/// Frequency of branch `mode` at position `x` and wavevector `k`, each three
/// doubles.
///
/// # Safety
/// `medium` must be a live handle, `x` and `k` must point to three doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn emrt_medium_frequency(
    medium: *const EmrtMedium,
    mode: usize,
    x: *const f64,
    k: *const f64,
    out: *mut f64,
) -> EmrtStatus {
    guard(|| {
        let m = medium.as_ref().ok_or_else(|| null("medium"))?;
        let x = read_v3(x, "x")?;
        let k = read_v3(k, "k")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.inner.frequency(mode, &x, &k).map_err(lift)?;
        Ok(())
    })
}

/// Radial correlation shape for [`emrt_lorentz_total`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmrtSpectrumKind {
    Gaussian = 0,
    Exponential = 1,
}

/// Total scattering cross-section of an isotropic medium whose permittivity,
/// permeability and cross fluctuations share one radial shape with the given
/// amplitudes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn emrt_lorentz_total(
    c0: f64,
    wavenumber: f64,
    kind: EmrtSpectrumKind,
    length: f64,
    amp_eps: f64,
    amp_mu: f64,
    amp_cross: f64,
    order: usize,
    out: *mut f64,
) -> EmrtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(c0 > 0.0 && wavenumber >= 0.0 && order > 0) {
            return Err(invalid("c0 and order must be positive, wavenumber nonnegative"));
        }
        let shape = match kind {
            EmrtSpectrumKind::Gaussian => Spectrum::Gaussian { length },
            EmrtSpectrumKind::Exponential => Spectrum::Exponential { length },
        };
        shape.validate().map_err(lift)?;
        *out = lorentz_total(
            c0,
            wavenumber,
            |q| amp_eps * shape.radial(q),
            |q| amp_mu * shape.radial(q),
            |q| amp_cross * shape.radial(q),
            order,
        );
        Ok(())
    })
}

/// Runs the Monte Carlo transport solver on a scenario file. A nonzero
/// `workers` overrides the worker count of the file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn emrt_rte_run(path: *const c_char, workers: usize, out: *mut *mut EmrtHistogram) -> EmrtStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let config = parse_scenario(Path::new(path)).map_err(lift)?;
        let mut scenario = config.scenario().map_err(lift)?;
        if workers > 0 {
            scenario.numerics.workers = workers;
        }
        let hist = run_simulation(&scenario).map_err(lift)?;
        *out = Box::into_raw(Box::new(EmrtHistogram { inner: hist }));
        Ok(())
    })
}

/// # Safety
/// `hist` must be null or a live handle from [`emrt_rte_run`].
#[no_mangle]
pub unsafe extern "C" fn emrt_histogram_free(hist: *mut EmrtHistogram) {
    if !hist.is_null() {
        drop(Box::from_raw(hist));
    }
}

/// Surviving weighted energy and its batch standard error.
///
/// # Safety
/// `hist` must be a live handle; `total` and `stderr` writable.
#[no_mangle]
pub unsafe extern "C" fn emrt_histogram_total(
    hist: *const EmrtHistogram,
    total: *mut f64,
    stderr: *mut f64,
) -> EmrtStatus {
    guard(|| {
        let h = hist.as_ref().ok_or_else(|| null("hist"))?;
        if total.is_null() || stderr.is_null() {
            return Err(null("total/stderr"));
        }
        *total = h.inner.total();
        *stderr = h.inner.total_stderr();
        Ok(())
    })
}

/// Number of bins in the histogram.
///
/// # Safety
/// `hist` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn emrt_histogram_len(hist: *const EmrtHistogram, out: *mut usize) -> EmrtStatus {
    guard(|| {
        let h = hist.as_ref().ok_or_else(|| null("hist"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = h.inner.trace.len();
        Ok(())
    })
}

/// Copies the per-bin energy into `buf`, which must hold exactly
/// [`emrt_histogram_len`] doubles.
///
/// # Safety
/// `hist` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn emrt_histogram_copy_trace(
    hist: *const EmrtHistogram,
    buf: *mut f64,
    len: usize,
) -> EmrtStatus {
    guard(|| {
        let h = hist.as_ref().ok_or_else(|| null("hist"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != h.inner.trace.len() {
            return Err(invalid("buffer length does not match the histogram"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&h.inner.trace);
        Ok(())
    })
}
