//! C ABI for the vtolctrl toolkit: opaque handles, integer status codes, and
//! a thread-local last-error message. The header is generated into
//! `include/vtolctrl.h` by the build script.
//!
//! Ownership rules: every `*_new`/`*_load`/`*_synth`/`*_simulate` output is
//! owned by the caller and must be released with the matching `*_free`.
//! Passing a handle after freeing it, or handing in pointers that do not
//! satisfy the documented lengths, is undefined behavior, as in any C API;
//! the per-function safety contract is exactly that.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vtolctrl::error::Error;
use vtolctrl::linalg::{spectral_abscissa, Matrix, Tolerances};
use vtolctrl::models::{
    build_hover_model, build_level_model, load_model, performance_from_weights, save_model,
    LinearModel,
};
use vtolctrl::sim::{metrics, simulate, ControllerPolicy, SimConfig, SimTrace};
use vtolctrl::synthesis::{
    h2_certificate, h2_lmi_witness, h2_synthesize, lqr_certificate, lqr_synthesize, WeightSpec,
};
use vtolctrl::wind::DrydenParams;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtolStatus {
    VtolOk = 0,
    VtolNullArgument = 1,
    VtolInvalidArgument = 2,
    VtolSingular = 3,
    VtolNotStabilizable = 4,
    VtolNoConvergence = 5,
    VtolUnstable = 6,
    VtolDiverged = 7,
    VtolIoError = 8,
    VtolParseError = 9,
    VtolPanic = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> VtolStatus {
    match err {
        Error::SingularMatrix { .. }
        | Error::SingularFeedthrough
        | Error::SingularP
        | Error::SingularX
        | Error::SingularAic
        | Error::RankDeficient { .. }
        | Error::DegenerateSpectrum { .. } => VtolStatus::VtolSingular,
        Error::NotStabilizable => VtolStatus::VtolNotStabilizable,
        Error::NoConvergence { .. } => VtolStatus::VtolNoConvergence,
        Error::UnstableSystem { .. } | Error::NotSymmetric { .. } => VtolStatus::VtolUnstable,
        Error::Diverged { .. } | Error::NonFinite { .. } => VtolStatus::VtolDiverged,
        Error::Io(_) => VtolStatus::VtolIoError,
        Error::Parse { .. } => VtolStatus::VtolParseError,
        Error::DimensionMismatch { .. }
        | Error::InvalidConfig { .. }
        | Error::StepTooLarge { .. }
        | Error::EmptyTrace => VtolStatus::VtolInvalidArgument,
    }
}

fn report(err: Error) -> VtolStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

/// Runs a closure, converting panics into `VtolPanic`.
fn guarded(f: impl FnOnce() -> VtolStatus) -> VtolStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            VtolStatus::VtolPanic
        }
    }
}

/// Opaque linear plant handle.
pub struct VtolModel {
    inner: LinearModel,
}

/// Opaque synthesized-gain handle.
pub struct VtolGain {
    k: Matrix,
    gamma: f64,
    spectral_abscissa: f64,
    certified: bool,
    certificate_worst: f64,
}

/// Opaque simulation-trace handle.
pub struct VtolTrace {
    inner: SimTrace,
    reference: Vec<f64>,
}

unsafe fn model_ref<'a>(model: *const VtolModel) -> Option<&'a VtolModel> {
    model.as_ref()
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version string; static storage, do not free.
#[no_mangle]
pub extern "C" fn vtol_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message into `buf` (truncating) and returns the
/// full message length in bytes, excluding the terminator.
#[no_mangle]
pub unsafe extern "C" fn vtol_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            // keep the copy terminated even when truncated
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

/// Built-in 4-state level-flight plant.
#[no_mangle]
pub extern "C" fn vtol_model_level() -> *mut VtolModel {
    boxed(VtolModel {
        inner: build_level_model(),
    })
}

/// Built-in 6-state hover plant.
#[no_mangle]
pub extern "C" fn vtol_model_hover() -> *mut VtolModel {
    boxed(VtolModel {
        inner: build_hover_model(),
    })
}

/// Loads a model from a JSON file.
#[no_mangle]
pub unsafe extern "C" fn vtol_model_load(
    path: *const c_char,
    out: *mut *mut VtolModel,
) -> VtolStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return VtolStatus::VtolInvalidArgument;
            }
        };
        match load_model(Path::new(path)) {
            Ok(model) => {
                *out = boxed(VtolModel { inner: model });
                VtolStatus::VtolOk
            }
            Err(e) => report(e),
        }
    })
}

/// Saves a model to a JSON file.
#[no_mangle]
pub unsafe extern "C" fn vtol_model_save(
    model: *const VtolModel,
    path: *const c_char,
) -> VtolStatus {
    guarded(|| {
        let Some(model) = model_ref(model) else {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        };
        if path.is_null() {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return VtolStatus::VtolInvalidArgument;
            }
        };
        match save_model(&model.inner, Path::new(path)) {
            Ok(()) => VtolStatus::VtolOk,
            Err(e) => report(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn vtol_model_free(model: *mut VtolModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of states, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn vtol_model_states(model: *const VtolModel) -> usize {
    model_ref(model).map_or(0, |m| m.inner.n_states())
}

/// Number of control inputs, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn vtol_model_inputs(model: *const VtolModel) -> usize {
    model_ref(model).map_or(0, |m| m.inner.n_inputs())
}

unsafe fn diag_from(
    ptr_: *const f64,
    len: usize,
    expected: usize,
    what: &str,
) -> Result<Matrix, VtolStatus> {
    if ptr_.is_null() {
        set_error("null argument");
        return Err(VtolStatus::VtolNullArgument);
    }
    if len != expected {
        set_error(&format!("{what}: expected {expected} entries, got {len}"));
        return Err(VtolStatus::VtolInvalidArgument);
    }
    let slice = std::slice::from_raw_parts(ptr_, len);
    Ok(Matrix::diag(slice))
}

/// LQR synthesis with diagonal weights (`q_diag` length = states,
/// `r_diag` length = inputs). The gain carries its certificate outcome.
#[no_mangle]
pub unsafe extern "C" fn vtol_synth_lqr(
    model: *const VtolModel,
    q_diag: *const f64,
    q_len: usize,
    r_diag: *const f64,
    r_len: usize,
    out: *mut *mut VtolGain,
) -> VtolStatus {
    guarded(|| {
        let Some(model) = model_ref(model) else {
            set_error("null model");
            return VtolStatus::VtolNullArgument;
        };
        if out.is_null() {
            set_error("null output pointer");
            return VtolStatus::VtolNullArgument;
        }
        let n = model.inner.n_states();
        let m = model.inner.n_inputs();
        let q = match diag_from(q_diag, q_len, n, "q_diag") {
            Ok(q) => q,
            Err(s) => return s,
        };
        let r = match diag_from(r_diag, r_len, m, "r_diag") {
            Ok(r) => r,
            Err(s) => return s,
        };
        let tol = Tolerances::default();
        let weights = WeightSpec::new(q, r);
        match lqr_synthesize(&model.inner, &weights, &tol) {
            Ok(gain) => {
                let report_t1 =
                    match lqr_certificate(&model.inner, &weights, &gain.k, &gain.care.p, &tol) {
                        Ok(r) => r,
                        Err(e) => return report(e),
                    };
                *out = boxed(VtolGain {
                    k: gain.k,
                    gamma: f64::NAN,
                    spectral_abscissa: gain.spectral_abscissa,
                    certified: report_t1.satisfied,
                    certificate_worst: report_t1.worst_eigenvalue,
                });
                VtolStatus::VtolOk
            }
            Err(e) => report(e),
        }
    })
}

/// H2 synthesis. With non-null weight arrays the performance pair is built
/// from the diagonal state/input weights; with nulls the model's own
/// `(Cz, Du)` pair is used.
#[no_mangle]
pub unsafe extern "C" fn vtol_synth_h2(
    model: *const VtolModel,
    z_state_diag: *const f64,
    z_state_len: usize,
    z_input_diag: *const f64,
    z_input_len: usize,
    out: *mut *mut VtolGain,
) -> VtolStatus {
    guarded(|| {
        let Some(model) = model_ref(model) else {
            set_error("null model");
            return VtolStatus::VtolNullArgument;
        };
        if out.is_null() {
            set_error("null output pointer");
            return VtolStatus::VtolNullArgument;
        }
        let tol = Tolerances::default();
        let plant = if z_state_diag.is_null() && z_input_diag.is_null() {
            model.inner.clone()
        } else {
            let n = model.inner.n_states();
            let m = model.inner.n_inputs();
            let zq = match diag_from(z_state_diag, z_state_len, n, "z_state_diag") {
                Ok(q) => q,
                Err(s) => return s,
            };
            let zr = match diag_from(z_input_diag, z_input_len, m, "z_input_diag") {
                Ok(r) => r,
                Err(s) => return s,
            };
            let (cz, du) = match performance_from_weights(&zq, &zr, &tol) {
                Ok(pair) => pair,
                Err(e) => return report(e),
            };
            match model.inner.clone().with_performance(cz, du) {
                Ok(p) => p,
                Err(e) => return report(e),
            }
        };
        match h2_synthesize(&plant, &tol) {
            Ok(h2) => {
                let witness = match h2_lmi_witness(&plant, &h2.k, &tol) {
                    Ok(w) => w,
                    Err(e) => return report(e),
                };
                let report_t2 = match h2_certificate(&plant, &h2.k, &witness, h2.gamma, &tol) {
                    Ok(r) => r,
                    Err(e) => return report(e),
                };
                *out = boxed(VtolGain {
                    k: h2.k,
                    gamma: h2.gamma,
                    spectral_abscissa: h2.spectral_abscissa,
                    certified: report_t2.satisfied,
                    certificate_worst: report_t2.worst_eigenvalue,
                });
                VtolStatus::VtolOk
            }
            Err(e) => report(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn vtol_gain_free(gain: *mut VtolGain) {
    if !gain.is_null() {
        drop(Box::from_raw(gain));
    }
}

#[no_mangle]
pub unsafe extern "C" fn vtol_gain_rows(gain: *const VtolGain) -> usize {
    gain.as_ref().map_or(0, |g| g.k.rows())
}

#[no_mangle]
pub unsafe extern "C" fn vtol_gain_cols(gain: *const VtolGain) -> usize {
    gain.as_ref().map_or(0, |g| g.k.cols())
}

/// Copies the gain matrix row-major into `buf` (length must be
/// rows * cols).
#[no_mangle]
pub unsafe extern "C" fn vtol_gain_copy(
    gain: *const VtolGain,
    buf: *mut f64,
    len: usize,
) -> VtolStatus {
    guarded(|| {
        let Some(gain) = gain.as_ref() else {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        };
        if buf.is_null() {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        }
        let needed = gain.k.rows() * gain.k.cols();
        if len != needed {
            set_error(&format!("buffer length {len}, need {needed}"));
            return VtolStatus::VtolInvalidArgument;
        }
        ptr::copy_nonoverlapping(gain.k.data().as_ptr(), buf, needed);
        VtolStatus::VtolOk
    })
}

/// Attained H2 norm; NaN for LQR gains.
#[no_mangle]
pub unsafe extern "C" fn vtol_gain_gamma(gain: *const VtolGain) -> f64 {
    gain.as_ref().map_or(f64::NAN, |g| g.gamma)
}

#[no_mangle]
pub unsafe extern "C" fn vtol_gain_spectral_abscissa(gain: *const VtolGain) -> f64 {
    gain.as_ref().map_or(f64::NAN, |g| g.spectral_abscissa)
}

/// 1 when the matrix-inequality certificate accepted the gain.
#[no_mangle]
pub unsafe extern "C" fn vtol_gain_certified(gain: *const VtolGain) -> c_int {
    gain.as_ref().map_or(0, |g| g.certified as c_int)
}

/// Most-positive eigenvalue across the certificate blocks.
#[no_mangle]
pub unsafe extern "C" fn vtol_gain_certificate_worst(gain: *const VtolGain) -> f64 {
    gain.as_ref().map_or(f64::NAN, |g| g.certificate_worst)
}

/// Closed-loop simulation of `u = K x` under the built-in gust model.
/// `x0` must carry one entry per state; `seed` selects the gust
/// realization; `with_disturbance = 0` runs the free response.
#[no_mangle]
pub unsafe extern "C" fn vtol_simulate(
    model: *const VtolModel,
    gain: *const VtolGain,
    x0: *const f64,
    x0_len: usize,
    dt: f64,
    t_final: f64,
    seed: u64,
    with_disturbance: c_int,
    out: *mut *mut VtolTrace,
) -> VtolStatus {
    guarded(|| {
        let (Some(model), Some(gain)) = (model_ref(model), gain.as_ref()) else {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        };
        if x0.is_null() || out.is_null() {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        }
        let n = model.inner.n_states();
        if x0_len != n {
            set_error(&format!("x0 length {x0_len}, need {n}"));
            return VtolStatus::VtolInvalidArgument;
        }
        let x0 = std::slice::from_raw_parts(x0, n).to_vec();
        let dryden = if with_disturbance != 0 {
            let mut params = DrydenParams::for_mode(model.inner.trim.flight_mode);
            params.dt = dt;
            params.seed = seed;
            Some(params)
        } else {
            None
        };
        let config = SimConfig {
            dt,
            t_final,
            reference: vec![0.0; n],
            x0,
            dryden,
        };
        let policy = ControllerPolicy::state_feedback(gain.k.clone());
        match simulate(&model.inner, &policy, &config) {
            Ok(trace) => {
                *out = boxed(VtolTrace {
                    inner: trace,
                    reference: vec![0.0; n],
                });
                VtolStatus::VtolOk
            }
            Err(e) => report(e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn vtol_trace_free(trace: *mut VtolTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples in the trace.
#[no_mangle]
pub unsafe extern "C" fn vtol_trace_len(trace: *const VtolTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.len())
}

/// Copies the time axis into `buf`.
#[no_mangle]
pub unsafe extern "C" fn vtol_trace_copy_times(
    trace: *const VtolTrace,
    buf: *mut f64,
    len: usize,
) -> VtolStatus {
    guarded(|| {
        let Some(trace) = trace.as_ref() else {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        };
        if buf.is_null() {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        }
        if len != trace.inner.len() {
            set_error(&format!("buffer length {len}, need {}", trace.inner.len()));
            return VtolStatus::VtolInvalidArgument;
        }
        ptr::copy_nonoverlapping(trace.inner.times.as_ptr(), buf, len);
        VtolStatus::VtolOk
    })
}

/// Copies one state channel into `buf`.
#[no_mangle]
pub unsafe extern "C" fn vtol_trace_copy_state(
    trace: *const VtolTrace,
    state_index: usize,
    buf: *mut f64,
    len: usize,
) -> VtolStatus {
    guarded(|| {
        let Some(trace) = trace.as_ref() else {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        };
        if buf.is_null() {
            set_error("null argument");
            return VtolStatus::VtolNullArgument;
        }
        if trace.inner.is_empty() || state_index >= trace.inner.states[0].len() {
            set_error("state index out of range");
            return VtolStatus::VtolInvalidArgument;
        }
        if len != trace.inner.len() {
            set_error(&format!("buffer length {len}, need {}", trace.inner.len()));
            return VtolStatus::VtolInvalidArgument;
        }
        for (k, xs) in trace.inner.states.iter().enumerate() {
            *buf.add(k) = xs[state_index];
        }
        VtolStatus::VtolOk
    })
}

/// RMS of one state's deviation from the regulation reference; NaN on a bad
/// handle or index.
#[no_mangle]
pub unsafe extern "C" fn vtol_trace_rms(trace: *const VtolTrace, state_index: usize) -> f64 {
    let Some(trace) = trace.as_ref() else {
        return f64::NAN;
    };
    match metrics(&trace.inner, &trace.reference) {
        Ok(m) => m.rms.get(state_index).copied().unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

/// Spectral abscissa of `A + Bu K`; NaN on failure.
#[no_mangle]
pub unsafe extern "C" fn vtol_closed_loop_abscissa(
    model: *const VtolModel,
    gain: *const VtolGain,
) -> f64 {
    let (Some(model), Some(gain)) = (model_ref(model), gain.as_ref()) else {
        return f64::NAN;
    };
    if gain.k.rows() != model.inner.n_inputs() || gain.k.cols() != model.inner.n_states() {
        return f64::NAN;
    }
    let a_cl = &model.inner.a + &(&model.inner.bu * &gain.k);
    spectral_abscissa(&a_cl, &Tolerances::default()).unwrap_or(f64::NAN)
}
