//! C ABI over the `qthermo` library.
//!
//! Models and states are opaque heap handles released with their `*_free`
//! function. Every fallible call returns a [`QtStatus`]; on failure the
//! message is kept per thread and read back with [`qt_last_error_message`].
//! Panics never cross the boundary: they become [`QtStatus::Panic`].
//!
//! Matrices cross the boundary as separate row-major real and imaginary
//! arrays of `dim * dim` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qthermo::coherence::{energy_basis, EnergyBasis};
use qthermo::engine::{run_cycle, CycleSpec, EngineSystem};
use qthermo::lindblad::{evolve, text, DensityMatrix, EvolutionConfig, LindbladModel};
use qthermo::matrix::CMatrix;
use qthermo::models::{build_2n_model, build_two_qubit_model, gibbs_state, TwoNModelSpec, TwoQubitSpec};
use qthermo::thermo::{entropy_production_rate, heat_current, tradeoff_check};
use qthermo::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InvalidState = 4,
    NotConverged = 5,
    Unstable = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for QtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => QtStatus::Parse,
            Error::InvalidState(_) => QtStatus::InvalidState,
            Error::NotConverged { .. } => QtStatus::NotConverged,
            Error::Stability { .. } => QtStatus::Unstable,
            Error::Io(_) => QtStatus::Io,
            _ => QtStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Runs `f`, recording any error or panic for the calling thread.
fn guard(f: impl FnOnce() -> Result<(), (QtStatus, String)>) -> QtStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QtStatus::Panic
        }
    }
}

fn lib(e: Error) -> (QtStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(name: &str) -> (QtStatus, String) {
    (QtStatus::NullPointer, format!("`{name}` is null"))
}

fn bad(msg: impl Into<String>) -> (QtStatus, String) {
    (QtStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (QtStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), (QtStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (QtStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| bad(format!("`{name}` is not UTF-8")))
}

/// A Lindblad model with its energy eigenbasis.
pub struct QtModel {
    model: LindbladModel,
    basis: EnergyBasis,
}

/// A validated density matrix.
pub struct QtState {
    rho: DensityMatrix,
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes,
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn store_model(out: *mut *mut QtModel, model: LindbladModel, basis: EnergyBasis) -> Result<(), (QtStatus, String)> {
    unsafe { write_out(out, boxed(QtModel { model, basis }), "out") }
}

/// Parses a model from the plain-text model format.
///
/// # Safety
/// `model_text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_model_from_text(model_text: *const c_char, out: *mut *mut QtModel) -> QtStatus {
    guard(|| {
        let model = text::from_text(c_str(model_text, "model_text")?).map_err(lib)?;
        let basis = energy_basis(&model, None).map_err(lib)?;
        store_model(out, model, basis)
    })
}

/// 2N model with `N` ground and `N` excited states and a collective lowering operator.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_model_two_n(
    n: usize,
    omega0: f64,
    gamma_down: f64,
    beta: f64,
    out: *mut *mut QtModel,
) -> QtStatus {
    guard(|| {
        let (model, basis) = build_2n_model(&TwoNModelSpec::new(n, omega0, gamma_down, beta)).map_err(lib)?;
        store_model(out, model, basis)
    })
}

/// Two qubits with collective decay to one bath.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_model_two_qubit(omega: f64, beta: f64, gamma0: f64, out: *mut *mut QtModel) -> QtStatus {
    guard(|| {
        let (model, basis) = build_two_qubit_model(&TwoQubitSpec::new(omega, beta, gamma0)).map_err(lib)?;
        store_model(out, model, basis)
    })
}

/// Hilbert-space dimension, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_model_dim(model: *const QtModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dim())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_model_free(model: *mut QtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Builds a state from row-major real and imaginary parts of a `dim x dim` matrix.
///
/// # Safety
/// `re` and `im` must each point to `dim * dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_state_new(dim: usize, re: *const f64, im: *const f64, out: *mut *mut QtState) -> QtStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        if dim == 0 {
            return Err(bad("dimension must be positive"));
        }
        let (re, im) = (
            std::slice::from_raw_parts(re, dim * dim),
            std::slice::from_raw_parts(im, dim * dim),
        );
        let m = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(re[i * dim + j], im[i * dim + j]));
        let rho = DensityMatrix::new(m).map_err(lib)?;
        write_out(out, boxed(QtState { rho }), "out")
    })
}

/// Gibbs state `e^{-βH}/Z` of the model's Hamiltonian.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_state_gibbs(model: *const QtModel, beta: f64, out: *mut *mut QtState) -> QtStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let rho = gibbs_state(m.model.hamiltonian(), beta).map_err(lib)?;
        write_out(out, boxed(QtState { rho }), "out")
    })
}

/// Copies the state into row-major `re` and `im` arrays of `len` doubles each.
///
/// # Safety
/// `state` must be a live handle; `re` and `im` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qt_state_copy(state: *const QtState, re: *mut f64, im: *mut f64, len: usize) -> QtStatus {
    guard(|| {
        let s = deref(state, "state")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let m = s.rho.matrix();
        let d = m.nrows();
        if len < d * d {
            return Err((QtStatus::BufferTooSmall, format!("need {} doubles, got {len}", d * d)));
        }
        for i in 0..d {
            for j in 0..d {
                *re.add(i * d + j) = m[(i, j)].re;
                *im.add(i * d + j) = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_state_free(state: *mut QtState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Integrates the master equation for `duration` with RK4 steps of `dt` and
/// returns the final state.
///
/// # Safety
/// `model` and `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_evolve(
    model: *const QtModel,
    state: *const QtState,
    dt: f64,
    duration: f64,
    out: *mut *mut QtState,
) -> QtStatus {
    guard(|| {
        let (m, s) = (deref(model, "model")?, deref(state, "state")?);
        let traj = evolve(&m.model, &s.rho, &EvolutionConfig::new(dt, duration)).map_err(lib)?;
        let rho = traj.last().cloned().unwrap_or_else(|| s.rho.clone());
        write_out(out, boxed(QtState { rho }), "out")
    })
}

/// Heat current into the system from bath `bath` (all baths when null).
///
/// # Safety
/// `model` and `state` must be live handles; `bath` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qt_heat_current(
    model: *const QtModel,
    state: *const QtState,
    bath: *const c_char,
    out: *mut f64,
) -> QtStatus {
    guard(|| {
        let (m, s) = (deref(model, "model")?, deref(state, "state")?);
        let label = if bath.is_null() {
            None
        } else {
            Some(c_str(bath, "bath")?)
        };
        let j = heat_current(&m.model, s.rho.matrix(), label).map_err(lib)?;
        write_out(out, j, "out")
    })
}

/// Entropy production rate summed over baths; `divergent` is set to 1 when
/// the state lacks support where the dynamics needs it.
///
/// # Safety
/// `model` and `state` must be live handles; `out` and `divergent` writable.
#[no_mangle]
pub unsafe extern "C" fn qt_entropy_production(
    model: *const QtModel,
    state: *const QtState,
    out: *mut f64,
    divergent: *mut i32,
) -> QtStatus {
    guard(|| {
        let (m, s) = (deref(model, "model")?, deref(state, "state")?);
        let r = entropy_production_rate(&m.model, s.rho.matrix()).map_err(lib)?;
        write_out(out, r.value, "out")?;
        write_out(divergent, i32::from(r.divergent), "divergent")
    })
}

/// Current, dissipation and coherence terms of the trade-off relations.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QtTradeoff {
    pub j: f64,
    pub sigma_dot: f64,
    /// `J²/σ̇`.
    pub ratio: f64,
    pub a_cl: f64,
    pub a_qm: f64,
    /// 1 when all three inequalities hold.
    pub holds: i32,
    pub divergent: i32,
}

/// # Safety
/// `model` and `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_tradeoff(model: *const QtModel, state: *const QtState, out: *mut QtTradeoff) -> QtStatus {
    guard(|| {
        let (m, s) = (deref(model, "model")?, deref(state, "state")?);
        let t = tradeoff_check(&m.model, s.rho.matrix(), &m.basis).map_err(lib)?;
        let value = QtTradeoff {
            j: t.j_rho,
            sigma_dot: t.sigma_rho,
            ratio: t.ratio_rho,
            a_cl: t.a_cl,
            a_qm: t.a_qm,
            holds: i32::from(t.all_ok()),
            divergent: i32::from(t.divergent),
        };
        write_out(out, value, "out")
    })
}

/// Parameters of a four-stroke cycle; `n = 0` selects the two-qubit medium,
/// `n > 0` the 2N medium.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QtCycleParams {
    pub n: usize,
    pub omega_h: f64,
    pub omega_c: f64,
    pub beta_h: f64,
    pub beta_c: f64,
    pub tau_h: f64,
    pub tau_c: f64,
    pub gamma0: f64,
    pub dt: f64,
    pub max_cycles: usize,
}

/// Stationary-cycle figures of merit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QtCycleResult {
    pub w: f64,
    pub q_h: f64,
    pub q_c: f64,
    pub eta: f64,
    pub eta_car: f64,
    /// NaN when the cycle is not an engine or `η` is outside `(0, η_Car)`.
    pub p: f64,
    pub abar_cl: f64,
    pub abar_qm: f64,
    pub cycles: usize,
    pub converged: i32,
}

/// Fills `params` with the default two-qubit cycle.
///
/// # Safety
/// `params` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_cycle_params_default(params: *mut QtCycleParams) -> QtStatus {
    guard(|| {
        let d = CycleSpec::default();
        let value = QtCycleParams {
            n: 0,
            omega_h: d.omega_h,
            omega_c: d.omega_c,
            beta_h: d.beta_h,
            beta_c: d.beta_c,
            tau_h: d.tau_h,
            tau_c: d.tau_c,
            gamma0: d.gamma0,
            dt: d.dt,
            max_cycles: 200,
        };
        write_out(params, value, "params")
    })
}

/// Runs the cycle to stationarity from the bright-sector initial state.
///
/// # Safety
/// `params` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_run_cycle(params: *const QtCycleParams, out: *mut QtCycleResult) -> QtStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let spec = CycleSpec {
            system: if p.n == 0 {
                EngineSystem::TwoQubit
            } else {
                EngineSystem::TwoN(p.n)
            },
            omega_h: p.omega_h,
            omega_c: p.omega_c,
            beta_h: p.beta_h,
            beta_c: p.beta_c,
            tau_h: p.tau_h,
            tau_c: p.tau_c,
            gamma0: p.gamma0,
            dt: p.dt,
            ..CycleSpec::default()
        };
        let run = run_cycle(&spec, &spec.initial_state().map_err(lib)?, p.max_cycles).map_err(lib)?;
        let r = &run.record;
        let value = QtCycleResult {
            w: r.w,
            q_h: r.q_h,
            q_c: r.q_c,
            eta: r.eta,
            eta_car: r.eta_car,
            p: run.performance.p,
            abar_cl: r.abar_cl,
            abar_qm: r.abar_qm,
            cycles: run.cycles,
            converged: i32::from(r.converged),
        };
        write_out(out, value, "out")
    })
}
