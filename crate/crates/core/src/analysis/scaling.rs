use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::propagator::EvolutionSettings;
use crate::protocol::{BjInterferometer, BjProtocolConfig, Interferometer, IsingInterferometer, IsingProtocolConfig};

use super::{
    default_phase_step, fit_power_law, fit_sinusoid, linear_grid, optimize_bj_endpoint, optimize_ising_tau_prime,
    phase_uncertainty, scan_phase, EndpointSearch, ScalingFit, SinusoidFit,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOptions {
    pub search: EndpointSearch,
    /// Re-optimize the endpoint per `N`. BJ templates without `omega_end`
    /// are always optimized.
    pub optimize: bool,
    /// Phase points for a fringe fit over `|φ| ≤ 2π/N`; 0 skips the fit.
    pub fit_points: usize,
    /// Finite-difference step; defaults to `min(1e-3, 0.01/N)`.
    pub delta: Option<f64>,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            search: EndpointSearch::default(),
            optimize: true,
            fit_points: 0,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    /// Error-propagation `Δφ` at `φ = 0`.
    pub delta_phi_min: f64,
    /// `Ω_end` (BJ) or `τ′` (Ising) used for this `N`.
    pub endpoint: f64,
    /// `B`: readout second moment at `φ = 0`.
    pub second_moment: f64,
    pub fit: Option<SinusoidFit>,
    /// Smallest `Δφ` over the fit scan, when one was run.
    pub scan_min_delta_phi: Option<f64>,
    pub norm_drift: f64,
    pub parity_drift: f64,
}

/// Per-`N` results plus the log-log fit; failed `N` are listed and
/// suppress the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub points: Vec<ScalingPoint>,
    pub failures: Vec<(usize, String)>,
    pub fit: Option<ScalingFit>,
}

fn measure<I: Interferometer>(engine: &I, endpoint: f64, options: &ScalingOptions) -> Result<ScalingPoint> {
    let n = engine.n_particles();
    let delta = options.delta.unwrap_or_else(|| default_phase_step(n));
    let delta_phi_min = phase_uncertainty(engine, 0.0, delta)?;
    let at = engine.run(0.0)?;
    let (fit, scan_min_delta_phi) = if options.fit_points > 0 {
        let w = 2.0 * PI / n as f64;
        let records = scan_phase(engine, &linear_grid(-w, w, options.fit_points), Some(delta));
        let fit = fit_sinusoid(&records, n, None).ok();
        let min = records
            .iter()
            .map(|r| r.delta_phi)
            .filter(|d| d.is_finite())
            .fold(f64::INFINITY, f64::min);
        (fit, Some(min))
    } else {
        (None, None)
    };
    Ok(ScalingPoint {
        n,
        delta_phi_min,
        endpoint,
        second_moment: at.second_moment,
        fit,
        scan_min_delta_phi,
        norm_drift: at.diagnostics.norm_drift,
        parity_drift: at.diagnostics.parity_drift,
    })
}

fn collect(ns: &[usize], results: Vec<Result<ScalingPoint>>) -> ScalingStudy {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (&n, r) in ns.iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push((n, e.to_string())),
        }
    }
    let fit = if failures.is_empty() {
        fit_power_law(&points.iter().map(|p| (p.n, p.delta_phi_min)).collect::<Vec<_>>()).ok()
    } else {
        None
    };
    ScalingStudy { points, failures, fit }
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.len() < 3 {
        return Err(invalid(format!("scaling needs at least 3 particle numbers, got {}", ns.len())));
    }
    Ok(())
}

/// `Δφ_min(N)` for BJ, re-optimizing `Ω_end` for every `N` unless the
/// template fixes it.
pub fn bj_scaling_study(
    template: &BjProtocolConfig,
    ns: &[usize],
    settings: &EvolutionSettings,
    options: &ScalingOptions,
) -> Result<ScalingStudy> {
    check_ns(ns)?;
    for &n in ns {
        BjProtocolConfig { n, ..template.clone() }.validate()?;
    }
    let results: Vec<Result<ScalingPoint>> = ns
        .par_iter()
        .map(|&n| {
            let config = BjProtocolConfig { n, ..template.clone() };
            let mut engine = BjInterferometer::new(&config, settings)?;
            let end = match config.omega_end {
                Some(w) if !options.optimize => w,
                _ => optimize_bj_endpoint(&engine, &options.search)?.argument,
            };
            engine.set_omega_end(Some(end))?;
            measure(&engine, end, options)
        })
        .collect();
    Ok(collect(ns, results))
}

/// `Δφ_min(N)` for the Ising chain; `τ′` is optimized per `N` when
/// `options.optimize` is set, otherwise the template's `τ′` is used.
pub fn ising_scaling_study(
    template: &IsingProtocolConfig,
    ns: &[usize],
    settings: &EvolutionSettings,
    options: &ScalingOptions,
) -> Result<ScalingStudy> {
    check_ns(ns)?;
    for &n in ns {
        IsingProtocolConfig { n, ..template.clone() }.validate()?;
    }
    let results: Vec<Result<ScalingPoint>> = ns
        .par_iter()
        .map(|&n| {
            let config = IsingProtocolConfig { n, ..template.clone() };
            let mut engine = IsingInterferometer::new(&config, settings)?;
            let tp = if options.optimize {
                optimize_ising_tau_prime(&engine, &options.search)?.argument
            } else {
                config.resolved_tau_prime()
            };
            engine.set_tau_prime(Some(tp))?;
            measure(&engine, tp, options)
        })
        .collect();
    Ok(collect(ns, results))
}
