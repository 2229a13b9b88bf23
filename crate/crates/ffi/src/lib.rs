//! C ABI for likelihood-ratio confidence sequences.
//!
//! Every function returns an [`LrcsStatus`]; outputs go through pointer
//! arguments. On failure, [`lrcs_last_error`] describes the most recent
//! error on the calling thread. States are opaque handles created by
//! [`lrcs_state_new`] and released by [`lrcs_state_free`]; strings returned
//! by the library are released by [`lrcs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use lrcs::confidence::{LrConfig, LrState, Weighting};
use lrcs::models::ObservationModel;
use lrcs::ucb::ucb_value;
use lrcs::{Error, Vector};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrcsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter or observation is outside its domain.
    InvalidArgument = 2,
    /// A vector length does not match the state dimension.
    DimensionMismatch = 3,
    /// A linear system or optimization failed numerically.
    Numerical = 4,
    /// The operation is not defined for this model.
    Unsupported = 5,
    /// Serialization failed.
    Serialization = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Observation families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrcsFamily {
    /// Gaussian noise; `param` is the standard deviation σ.
    Gaussian = 0,
    /// Poisson counts; `param` is ignored.
    Poisson = 1,
    /// Bernoulli outcomes; `param` is ignored.
    Bernoulli = 2,
    /// Laplace noise; `param` is the scale b.
    Laplace = 3,
    /// Weibull survival times; `param` is the shape p.
    Weibull = 4,
}

/// Opaque confidence-sequence state.
pub struct LrcsState {
    inner: LrState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> LrcsStatus {
    match err {
        Error::Domain { .. }
        | Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::NormExceedsBound { .. } => LrcsStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => LrcsStatus::DimensionMismatch,
        Error::Singular(_)
        | Error::Infeasible(_)
        | Error::NotPsd(_)
        | Error::NotRepresentable { .. }
        | Error::Timeout { .. } => LrcsStatus::Numerical,
        Error::Unsupported(_) => LrcsStatus::Unsupported,
        Error::Json(_) | Error::Io(_) => LrcsStatus::Serialization,
        Error::Round { source, .. } => status_of(source),
    }
}

/// Runs `f` behind the boundary: errors and panics become status codes.
fn guard(f: impl FnOnce() -> Result<(), (LrcsStatus, String)>) -> LrcsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LrcsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            LrcsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (LrcsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (LrcsStatus, String) {
    (LrcsStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn state_ref<'a>(state: *const LrcsState) -> Result<&'a LrState, (LrcsStatus, String)> {
    // SAFETY: the caller passes a handle from `lrcs_state_new` or null.
    unsafe { state.as_ref() }
        .map(|s| &s.inner)
        .ok_or_else(|| null("state"))
}

unsafe fn vector(data: *const f64, len: usize, name: &str) -> Result<Vector, (LrcsStatus, String)> {
    if len == 0 {
        return Ok(Vector::zeros(0));
    }
    if data.is_null() {
        return Err(null(name));
    }
    // SAFETY: the caller guarantees `len` readable doubles at `data`.
    Ok(Vector::from_column_slice(unsafe {
        slice::from_raw_parts(data, len)
    }))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), (LrcsStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    // SAFETY: non-null and, per the contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

fn model(family: LrcsFamily, param: f64) -> ObservationModel {
    match family {
        LrcsFamily::Gaussian => ObservationModel::Gaussian { sigma: param },
        LrcsFamily::Poisson => ObservationModel::Poisson,
        LrcsFamily::Bernoulli => ObservationModel::Bernoulli,
        LrcsFamily::Laplace => ObservationModel::Laplace { b: param },
        LrcsFamily::Weibull => ObservationModel::Weibull { p: param },
    }
}

/// Creates a state for `dim`-dimensional parameters in the ball of radius
/// `radius`, with regularization `lambda` and level `alpha`. `adaptive`
/// selects bias-based weights (nonzero) or `w ≡ 1` (zero).
///
/// # Safety
/// `out` must be valid for writing one pointer. The handle written there
/// must be released with [`lrcs_state_free`].
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_new(
    family: LrcsFamily,
    param: f64,
    dim: usize,
    radius: f64,
    lambda: f64,
    alpha: f64,
    adaptive: i32,
    out: *mut *mut LrcsState,
) -> LrcsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let weighting = if adaptive != 0 {
            Weighting::Adaptive
        } else {
            Weighting::Classical
        };
        let cfg = LrConfig::new(model(family, param), dim, radius, lambda, alpha)
            .with_weighting(weighting);
        let inner = LrState::new(cfg).map_err(lib_err)?;
        let handle = Box::into_raw(Box::new(LrcsState { inner }));
        // SAFETY: checked non-null above.
        unsafe { write(out, handle, "out") }
    })
}

/// Releases a state. Null is ignored.
///
/// # Safety
/// `state` must come from [`lrcs_state_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_free(state: *mut LrcsState) {
    if !state.is_null() {
        // SAFETY: ownership returns to Rust exactly once, per the contract.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Appends the observation `(x, y)`. Writes the round's weight to
/// `weight_out` when it is not null.
///
/// # Safety
/// `state` must be a live handle and `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_update(
    state: *mut LrcsState,
    x: *const f64,
    len: usize,
    y: f64,
    weight_out: *mut f64,
) -> LrcsStatus {
    guard(|| {
        // SAFETY: a live handle, per the contract.
        let st = unsafe { state.as_mut() }.ok_or_else(|| null("state"))?;
        let x = unsafe { vector(x, len, "x") }?;
        let w = st.inner.update(&x, y).map_err(lib_err)?.w;
        if !weight_out.is_null() {
            // SAFETY: non-null and valid for writes, per the contract.
            unsafe { weight_out.write(w) };
        }
        Ok(())
    })
}

/// `log R_t(θ)`.
///
/// # Safety
/// `state` must be a live handle, `theta` must point to `len` doubles and
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_log_ratio(
    state: *const LrcsState,
    theta: *const f64,
    len: usize,
    out: *mut f64,
) -> LrcsStatus {
    guard(|| {
        let st = unsafe { state_ref(state) }?;
        let theta = unsafe { vector(theta, len, "theta") }?;
        let v = st.log_ratio(&theta).map_err(lib_err)?;
        unsafe { write(out, v, "out") }
    })
}

/// Writes 1 when `θ` is in the current confidence set, else 0.
///
/// # Safety
/// As for [`lrcs_state_log_ratio`].
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_contains(
    state: *const LrcsState,
    theta: *const f64,
    len: usize,
    out: *mut i32,
) -> LrcsStatus {
    guard(|| {
        let st = unsafe { state_ref(state) }?;
        let theta = unsafe { vector(theta, len, "theta") }?;
        let v = st.membership(&theta).map_err(lib_err)?;
        unsafe { write(out, v as i32, "out") }
    })
}

/// Certified upper bound on `max {xᵀθ : θ in the confidence set}`.
///
/// # Safety
/// As for [`lrcs_state_log_ratio`], with `x` in place of `theta`.
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_ucb(
    state: *const LrcsState,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> LrcsStatus {
    guard(|| {
        let st = unsafe { state_ref(state) }?;
        let x = unsafe { vector(x, len, "x") }?;
        let v = ucb_value(st, &x).map_err(lib_err)?.value;
        unsafe { write(out, v, "out") }
    })
}

/// Upper bound on the squared bias of the current estimator along `x`.
///
/// # Safety
/// As for [`lrcs_state_ucb`].
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_bias_bound(
    state: *const LrcsState,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> LrcsStatus {
    guard(|| {
        let st = unsafe { state_ref(state) }?;
        let x = unsafe { vector(x, len, "x") }?;
        let v = st.bias_bound(&x).map_err(lib_err)?;
        unsafe { write(out, v, "out") }
    })
}

/// Copies the current estimator into `theta_out` (`len` must equal the
/// state dimension).
///
/// # Safety
/// `state` must be a live handle and `theta_out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_estimate(
    state: *const LrcsState,
    theta_out: *mut f64,
    len: usize,
) -> LrcsStatus {
    guard(|| {
        let st = unsafe { state_ref(state) }?;
        let theta = &st.leader().theta;
        if theta.len() != len {
            return Err(lib_err(Error::DimensionMismatch {
                expected: theta.len(),
                found: len,
            }));
        }
        if len == 0 {
            return Ok(());
        }
        if theta_out.is_null() {
            return Err(null("theta_out"));
        }
        // SAFETY: `len` writable doubles, per the contract.
        unsafe { slice::from_raw_parts_mut(theta_out, len) }.copy_from_slice(theta.as_slice());
        Ok(())
    })
}

/// JSON snapshot of the state. Release the string with
/// [`lrcs_string_free`].
///
/// # Safety
/// `state` must be a live handle and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn lrcs_state_to_json(
    state: *const LrcsState,
    out: *mut *mut c_char,
) -> LrcsStatus {
    guard(|| {
        let st = unsafe { state_ref(state) }?;
        let json = st.to_json().map_err(lib_err)?;
        let c = CString::new(json).map_err(|e| (LrcsStatus::Serialization, e.to_string()))?;
        unsafe { write(out, c.into_raw(), "out") }
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lrcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrcs_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or null when none has
/// failed. The pointer stays valid until the next failing call on the
/// same thread.
#[no_mangle]
pub extern "C" fn lrcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
