//! C ABI over the interferometer engines.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns a [`QptStatus`]; on
//! failure [`qpt_last_error`] describes what went wrong on the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qpt_metrology::analysis::{optimize_bj_endpoint, optimize_ising_tau_prime, phase_uncertainty, EndpointSearch};
use qpt_metrology::collective_spin::Axis;
use qpt_metrology::manifest::RunManifest;
use qpt_metrology::propagator::EvolutionSettings;
use qpt_metrology::protocol::{
    BjInterferometer, BjProtocolConfig, Interferometer, IsingInterferometer, IsingProtocolConfig, ProtocolOutcome,
};
use qpt_metrology::runner::execute;
use qpt_metrology::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QptStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an out-of-range enum value.
    InvalidArgument = 1,
    /// Parameters violate a model constraint.
    Validation = 2,
    /// Drift, non-convergence or a failed fit.
    Numerical = 3,
    Io = 4,
    /// A bug: the library panicked.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QptAxis {
    X = 0,
    Y = 1,
    Z = 2,
}

/// Bose-Josephson parameters. `omega_end = NaN` leaves the endpoint open.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QptBjConfig {
    pub n: usize,
    pub chi: f64,
    pub omega_0: f64,
    pub omega_f: f64,
    pub beta_1: f64,
    pub beta_2: f64,
    pub omega_end: f64,
    /// A [`QptAxis`] value.
    pub pulse_axis: u32,
    pub pulse_angle: f64,
}

/// Ising parameters. `tau_prime = NaN` means `tau`; `coupling_range = 0`
/// couples every pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QptIsingConfig {
    pub n: usize,
    pub b0: f64,
    pub j0: f64,
    pub tau: f64,
    pub tau_prime: f64,
    pub coupling_power: f64,
    pub coupling_range: usize,
}

/// Readout moments of one protocol run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QptOutcome {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub norm_drift: f64,
    pub parity_drift: f64,
}

pub struct QptBj {
    inner: BjInterferometer,
}

pub struct QptIsing {
    inner: IsingInterferometer,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QptStatus {
    if e.is_validation() {
        QptStatus::Validation
    } else if e.is_numerical() {
        QptStatus::Numerical
    } else {
        QptStatus::Io
    }
}

enum Failure {
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> QptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QptStatus::Ok,
        Ok(Err(Failure::Arg(m))) => {
            set_error(m);
            QptStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            QptStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers the C contract declares valid or null.
    unsafe { p.as_ref() }.ok_or_else(|| Failure::Arg(format!("{name} is null")))
}

fn non_null_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: as above, for exclusive access.
    unsafe { p.as_mut() }.ok_or_else(|| Failure::Arg(format!("{name} is null")))
}

fn open(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

fn settings(dt: f64) -> EvolutionSettings {
    if dt > 0.0 {
        EvolutionSettings::with_dt(dt)
    } else {
        EvolutionSettings::default()
    }
}

fn outcome(o: &ProtocolOutcome) -> QptOutcome {
    QptOutcome {
        mean: o.mean,
        second_moment: o.second_moment,
        variance: o.variance,
        norm_drift: o.diagnostics.norm_drift,
        parity_drift: o.diagnostics.parity_drift,
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty when none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qpt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Defaults for everything but `n` and `omega_f`.
#[no_mangle]
pub extern "C" fn qpt_bj_config_default(n: usize, omega_f: f64) -> QptBjConfig {
    let c = BjProtocolConfig::new(n, omega_f);
    QptBjConfig {
        n,
        chi: c.chi,
        omega_0: c.omega_0,
        omega_f,
        beta_1: c.beta_1,
        beta_2: c.beta_2,
        omega_end: f64::NAN,
        pulse_axis: QptAxis::X as u32,
        pulse_angle: c.pulse_angle,
    }
}

/// Defaults for everything but `n` and `tau`.
#[no_mangle]
pub extern "C" fn qpt_ising_config_default(n: usize, tau: f64) -> QptIsingConfig {
    let c = IsingProtocolConfig::new(n, tau);
    QptIsingConfig {
        n,
        b0: c.b0,
        j0: c.j0,
        tau,
        tau_prime: f64::NAN,
        coupling_power: c.coupling_power,
        coupling_range: 0,
    }
}

fn bj_config(c: &QptBjConfig) -> Result<BjProtocolConfig, Failure> {
    let pulse_axis = match c.pulse_axis {
        0 => Axis::X,
        1 => Axis::Y,
        2 => Axis::Z,
        other => return Err(Failure::Arg(format!("pulse_axis: {other} is not a QptAxis"))),
    };
    Ok(BjProtocolConfig {
        n: c.n,
        chi: c.chi,
        omega_0: c.omega_0,
        omega_f: c.omega_f,
        beta_1: c.beta_1,
        beta_2: c.beta_2,
        omega_end: open(c.omega_end),
        pulse_axis,
        pulse_angle: c.pulse_angle,
        phi: 0.0,
    })
}

fn ising_config(c: &QptIsingConfig) -> IsingProtocolConfig {
    IsingProtocolConfig {
        n: c.n,
        b0: c.b0,
        j0: c.j0,
        tau: c.tau,
        tau_prime: open(c.tau_prime),
        coupling_power: c.coupling_power,
        coupling_range: (c.coupling_range > 0).then_some(c.coupling_range),
        phi: 0.0,
    }
}

/// Prepares a Bose-Josephson engine (runs the splitting sweep once).
/// `dt <= 0` selects the default step.
///
/// # Safety
/// `config` must point to a valid config and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_new(config: *const QptBjConfig, dt: f64, out: *mut *mut QptBj) -> QptStatus {
    guard(|| {
        let c = bj_config(non_null(config, "config")?)?;
        let out = non_null_mut(out, "out")?;
        *out = ptr::null_mut();
        let inner = BjInterferometer::new(&c, &settings(dt))?;
        *out = Box::into_raw(Box::new(QptBj { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`qpt_bj_new`] and not be used afterwards; null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_free(handle: *mut QptBj) {
    if !handle.is_null() {
        // SAFETY: the handle was produced by Box::into_raw in qpt_bj_new.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Fixes the recombination endpoint; NaN clears it.
///
/// # Safety
/// `handle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_set_omega_end(handle: *mut QptBj, omega_end: f64) -> QptStatus {
    guard(|| {
        non_null_mut(handle, "handle")?.inner.set_omega_end(open(omega_end))?;
        Ok(())
    })
}

/// Minimizes `Δφ(0)` over `Ω_end` with default search settings, then fixes
/// the endpoint at the optimum. Either output may be null.
///
/// # Safety
/// `handle` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_optimize_endpoint(
    handle: *mut QptBj,
    omega_end: *mut f64,
    delta_phi: *mut f64,
) -> QptStatus {
    guard(|| {
        let h = non_null_mut(handle, "handle")?;
        let opt = optimize_bj_endpoint(&h.inner, &EndpointSearch::default())?;
        h.inner.set_omega_end(Some(opt.argument))?;
        // SAFETY: null outputs are skipped, others are writable per contract.
        unsafe {
            if let Some(p) = omega_end.as_mut() {
                *p = opt.argument;
            }
            if let Some(p) = delta_phi.as_mut() {
                *p = opt.delta_phi;
            }
        }
        Ok(())
    })
}

/// One run at phase `phi`; the endpoint must be set.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_run(handle: *const QptBj, phi: f64, out: *mut QptOutcome) -> QptStatus {
    guard(|| {
        let h = non_null(handle, "handle")?;
        let out = non_null_mut(out, "out")?;
        *out = outcome(&h.inner.run(phi)?);
        Ok(())
    })
}

/// Error-propagation `Δφ` at `phi` with central-difference step `delta`.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_phase_uncertainty(
    handle: *const QptBj,
    phi: f64,
    delta: f64,
    out: *mut f64,
) -> QptStatus {
    guard(|| {
        let h = non_null(handle, "handle")?;
        let out = non_null_mut(out, "out")?;
        *out = phase_uncertainty(&h.inner, phi, delta)?;
        Ok(())
    })
}

/// Fidelity with the initial state after sweeping all the way back.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_bj_roundtrip_fidelity(handle: *const QptBj, out: *mut f64) -> QptStatus {
    guard(|| {
        let h = non_null(handle, "handle")?;
        let out = non_null_mut(out, "out")?;
        *out = h.inner.roundtrip_fidelity()?;
        Ok(())
    })
}

/// Prepares an Ising engine. `dt <= 0` selects the default step.
///
/// # Safety
/// `config` must point to a valid config and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_new(
    config: *const QptIsingConfig,
    dt: f64,
    out: *mut *mut QptIsing,
) -> QptStatus {
    guard(|| {
        let c = ising_config(non_null(config, "config")?);
        let out = non_null_mut(out, "out")?;
        *out = ptr::null_mut();
        let inner = IsingInterferometer::new(&c, &settings(dt))?;
        *out = Box::into_raw(Box::new(QptIsing { inner }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`qpt_ising_new`] and not be used afterwards;
/// null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_free(handle: *mut QptIsing) {
    if !handle.is_null() {
        // SAFETY: the handle was produced by Box::into_raw in qpt_ising_new.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Sets `τ′`; NaN restores `τ′ = τ`.
///
/// # Safety
/// `handle` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_set_tau_prime(handle: *mut QptIsing, tau_prime: f64) -> QptStatus {
    guard(|| {
        non_null_mut(handle, "handle")?.inner.set_tau_prime(open(tau_prime))?;
        Ok(())
    })
}

/// Minimizes `Δφ(0)` over `τ′ ∈ (τ/2, τ]` and fixes `τ′` at the optimum.
///
/// # Safety
/// `handle` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_optimize_tau_prime(
    handle: *mut QptIsing,
    tau_prime: *mut f64,
    delta_phi: *mut f64,
) -> QptStatus {
    guard(|| {
        let h = non_null_mut(handle, "handle")?;
        let opt = optimize_ising_tau_prime(&h.inner, &EndpointSearch::default())?;
        h.inner.set_tau_prime(Some(opt.argument))?;
        // SAFETY: null outputs are skipped, others are writable per contract.
        unsafe {
            if let Some(p) = tau_prime.as_mut() {
                *p = opt.argument;
            }
            if let Some(p) = delta_phi.as_mut() {
                *p = opt.delta_phi;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_run(handle: *const QptIsing, phi: f64, out: *mut QptOutcome) -> QptStatus {
    guard(|| {
        let h = non_null(handle, "handle")?;
        let out = non_null_mut(out, "out")?;
        *out = outcome(&h.inner.run(phi)?);
        Ok(())
    })
}

/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_phase_uncertainty(
    handle: *const QptIsing,
    phi: f64,
    delta: f64,
    out: *mut f64,
) -> QptStatus {
    guard(|| {
        let h = non_null(handle, "handle")?;
        let out = non_null_mut(out, "out")?;
        *out = phase_uncertainty(&h.inner, phi, delta)?;
        Ok(())
    })
}

/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qpt_ising_roundtrip_fidelity(handle: *const QptIsing, out: *mut f64) -> QptStatus {
    guard(|| {
        let h = non_null(handle, "handle")?;
        let out = non_null_mut(out, "out")?;
        *out = h.inner.roundtrip_fidelity()?;
        Ok(())
    })
}

fn path_arg<'a>(p: *const c_char, name: &str) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::Arg(format!("{name} is null")));
    }
    // SAFETY: non-null and NUL-terminated per contract.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Arg(format!("{name} is not UTF-8")))?;
    Ok(Path::new(s))
}

/// Parses a TOML manifest and executes it, writing artifacts to `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qpt_run_manifest(manifest_path: *const c_char, out_dir: *const c_char) -> QptStatus {
    guard(|| {
        let manifest = RunManifest::parse_file(path_arg(manifest_path, "manifest_path")?)?;
        execute(&manifest, path_arg(out_dir, "out_dir")?)?;
        Ok(())
    })
}
