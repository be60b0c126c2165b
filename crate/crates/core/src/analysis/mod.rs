//! Phase scans, error-propagation precision, fringe fits, recombination
//! endpoint optimization and particle-number scaling.

mod fit;
mod optimize;
mod scaling;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::protocol::{Interferometer, ProtocolOutcome};

pub use fit::{fit_power_law, fit_sinusoid, SinusoidFit, ScalingFit};
pub use optimize::{
    minimize_on_bracket, optimize_bj_endpoint, optimize_ising_tau_prime, EndpointOptimum, EndpointSearch,
    Recombiner,
};
pub use scaling::{bj_scaling_study, ising_scaling_study, ScalingOptions, ScalingPoint, ScalingStudy};

/// Derivative floor per particle: `|∂⟨Ô⟩/∂φ| < DERIVATIVE_FLOOR·N` counts
/// as a flat signal.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

/// Default finite-difference step, `min(1e-3, 0.01/N)`.
pub fn default_phase_step(n: usize) -> f64 {
    (0.01 / n.max(1) as f64).min(1e-3)
}

/// Probe step used by the endpoint optimizers, `0.01/N`.
pub fn probe_phase_step(n: usize) -> f64 {
    0.01 / n.max(1) as f64
}

/// Wraps a closure `φ ↦ outcome` as an [`Interferometer`].
pub struct FnInterferometer<F> {
    n: usize,
    f: F,
}

impl<F> FnInterferometer<F>
where
    F: Fn(f64) -> Result<ProtocolOutcome> + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> Interferometer for FnInterferometer<F>
where
    F: Fn(f64) -> Result<ProtocolOutcome> + Send + Sync,
{
    fn n_particles(&self) -> usize {
        self.n
    }

    fn run(&self, phi: f64) -> Result<ProtocolOutcome> {
        (self.f)(phi)
    }
}

/// `√var / |Δmean / (2δφ)|`, or `+∞` below the derivative floor.
pub fn propagate_error(variance: f64, mean_plus: f64, mean_minus: f64, delta: f64, n: usize) -> f64 {
    let derivative = (mean_plus - mean_minus) / (2.0 * delta);
    if derivative.abs() < DERIVATIVE_FLOOR * n as f64 {
        return f64::INFINITY;
    }
    variance.max(0.0).sqrt() / derivative.abs()
}

/// Error-propagation phase uncertainty at `phi` with a central difference of
/// half-width `delta`.
pub fn phase_uncertainty<I: Interferometer + ?Sized>(runner: &I, phi: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("finite-difference step must be positive, got {delta}")));
    }
    let at = runner.run(phi)?;
    let plus = runner.run(phi + delta)?;
    let minus = runner.run(phi - delta)?;
    Ok(propagate_error(at.variance, plus.mean, minus.mean, delta, runner.n_particles()))
}

/// One grid point of a phase scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanRecord {
    pub phi: f64,
    pub mean: f64,
    pub second_moment: f64,
    pub delta_phi: f64,
    pub norm_drift: f64,
    pub parity_drift: f64,
    /// Set when this point failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

impl PhaseScanRecord {
    fn failed(phi: f64, e: &Error) -> Self {
        Self {
            phi,
            mean: f64::NAN,
            second_moment: f64::NAN,
            delta_phi: f64::NAN,
            norm_drift: f64::NAN,
            parity_drift: f64::NAN,
            error: Some(e.to_string()),
        }
    }
}

fn scan_point<I: Interferometer + ?Sized>(runner: &I, phi: f64, delta: f64) -> Result<PhaseScanRecord> {
    let at = runner.run(phi)?;
    let plus = runner.run(phi + delta)?;
    let minus = runner.run(phi - delta)?;
    Ok(PhaseScanRecord {
        phi,
        mean: at.mean,
        second_moment: at.second_moment,
        delta_phi: propagate_error(at.variance, plus.mean, minus.mean, delta, runner.n_particles()),
        norm_drift: at.diagnostics.norm_drift,
        parity_drift: at.diagnostics.parity_drift,
        error: None,
    })
}

/// Runs every grid point (in parallel on the current rayon pool) and
/// returns records in grid order. Failed points are recorded, not fatal.
pub fn scan_phase<I: Interferometer + ?Sized>(runner: &I, grid: &[f64], delta: Option<f64>) -> Vec<PhaseScanRecord> {
    let delta = delta.unwrap_or_else(|| default_phase_step(runner.n_particles()));
    grid.par_iter()
        .map(|&phi| scan_point(runner, phi, delta).unwrap_or_else(|e| PhaseScanRecord::failed(phi, &e)))
        .collect()
}

/// `count` points evenly spaced over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        // Weighted form: exact endpoints and exact antisymmetry when lo = -hi.
        _ => {
            let m = (count - 1) as f64;
            (0..count)
                .map(|i| (lo * (m - i as f64) + hi * i as f64) / m)
                .collect()
        }
    }
}

/// `√B·c / (A·N)`.
pub fn min_uncertainty(a: f64, b: f64, c: f64, n: usize) -> Result<f64> {
    if !(a > 0.0) {
        return Err(invalid(format!("amplitude must be positive, got {a}")));
    }
    if !(b >= 0.0) {
        return Err(invalid(format!("second moment must be non-negative, got {b}")));
    }
    if !(c > 0.0) {
        return Err(invalid(format!("frequency correction must be positive, got {c}")));
    }
    if n == 0 {
        return Err(invalid("particle number must be positive"));
    }
    Ok(b.sqrt() * c / (a * n as f64))
}
