use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::vector;

use super::Generator;

/// Step control for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSettings {
    /// Base time step; steps are laid on the global grid `t = k·dt`.
    pub dt: f64,
    /// Largest tolerated `|‖ψ(t₁)‖² - ‖ψ(t₀)‖²|`.
    #[serde(default = "default_norm_tolerance")]
    pub norm_tolerance: f64,
    /// Target change in final observables under step halving.
    #[serde(default = "default_convergence_tolerance")]
    pub convergence_tolerance: f64,
}

fn default_norm_tolerance() -> f64 {
    1e-8
}

fn default_convergence_tolerance() -> f64 {
    1e-6
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            norm_tolerance: default_norm_tolerance(),
            convergence_tolerance: default_convergence_tolerance(),
        }
    }
}

impl EvolutionSettings {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(invalid("norm_tolerance must be positive"));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(invalid("convergence_tolerance must be positive"));
        }
        Ok(())
    }

    pub fn halved(&self) -> Self {
        Self {
            dt: 0.5 * self.dt,
            ..*self
        }
    }
}

/// What an evolution did.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvolutionReport {
    pub steps: usize,
    pub norm_drift: f64,
}

/// Largest `‖H‖·h` handed to one Taylor expansion; longer exponentials are
/// split into equal substeps of the same midpoint generator.
const MAX_TAYLOR_ARGUMENT: f64 = 1.0;
const MAX_TAYLOR_TERMS: usize = 64;
/// Guard for merging grid points with breakpoints.
const MERGE_EPS: f64 = 1e-12;

/// Reusable buffers for the exponential steps.
struct Workspace {
    term: Vec<Complex64>,
    next: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            term: vec![zero; d],
            next: vec![zero; d],
            acc: vec![zero; d],
        }
    }
}

/// `ψ ← exp(-i h H(t)) ψ` by Taylor expansion truncated at machine
/// precision.
fn exp_step<G: Generator + ?Sized>(g: &G, t: f64, h: f64, psi: &mut [Complex64], ws: &mut Workspace) {
    let bound = g.norm_bound(t) * h.abs();
    if bound == 0.0 {
        return;
    }
    let substeps = (bound / MAX_TAYLOR_ARGUMENT).ceil().max(1.0) as usize;
    let hs = h / substeps as f64;
    for _ in 0..substeps {
        let scale = vector::norm_sqr(psi).sqrt();
        ws.term.copy_from_slice(psi);
        ws.acc.copy_from_slice(psi);
        for k in 1..=MAX_TAYLOR_TERMS {
            g.apply(t, &ws.term, &mut ws.next);
            // term ← (-i h / k) · next
            let f = hs / k as f64;
            let mut term_norm = 0.0;
            for ((term, next), acc) in ws.term.iter_mut().zip(&ws.next).zip(ws.acc.iter_mut()) {
                *term = Complex64::new(next.im * f, -next.re * f);
                *acc += *term;
                term_norm += term.norm_sqr();
            }
            if term_norm.sqrt() <= 1e-16 * scale {
                break;
            }
        }
        psi.copy_from_slice(&ws.acc);
    }
}

/// Step boundaries in `[t0, t1]`: the grid `k·dt`, plus generator
/// breakpoints, plus both ends.
pub(crate) fn step_points(t0: f64, t1: f64, dt: f64, breakpoints: &[f64]) -> Vec<f64> {
    let mut inner: Vec<f64> = Vec::new();
    let k_start = (t0 / dt).floor() as i64 + 1;
    let k_end = (t1 / dt).ceil() as i64 - 1;
    for k in k_start..=k_end {
        let t = k as f64 * dt;
        if t > t0 && t < t1 {
            inner.push(t);
        }
    }
    inner.extend(breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
    inner.sort_by(f64::total_cmp);

    let eps = MERGE_EPS * t1.abs().max(1.0);
    let mut points = vec![t0];
    for t in inner {
        let last = *points.last().expect("non-empty");
        if t - last > eps {
            points.push(t);
        } else if breakpoints.contains(&t) && points.len() > 1 {
            // A breakpoint replaces a grid point it nearly coincides with.
            *points.last_mut().expect("non-empty") = t;
        }
    }
    if t1 - *points.last().expect("non-empty") > eps || points.len() == 1 {
        points.push(t1);
    } else {
        *points.last_mut().expect("non-empty") = t1;
    }
    points
}

/// Integrates `i dψ/dt = H(t) ψ` from `t0` to `t1` in place with
/// exponential-midpoint steps `exp(-i h H(t + h/2))`, each applied to
/// machine precision.
///
/// The step grid is anchored at `t = 0` (`k·dt`), so evolving to an
/// intermediate grid point and continuing reproduces one uninterrupted run.
/// No renormalization is applied; norm drift beyond the tolerance is an
/// error.
pub fn evolve_in_place<G: Generator + ?Sized>(
    psi: &mut [Complex64],
    generator: &G,
    t0: f64,
    t1: f64,
    settings: &EvolutionSettings,
) -> Result<EvolutionReport> {
    settings.validate()?;
    if psi.len() != generator.dimension() {
        return Err(Error::DimensionMismatch {
            expected: generator.dimension(),
            actual: psi.len(),
        });
    }
    if !(t1 >= t0) {
        return Err(invalid(format!("evolution must run forward: t0 = {t0}, t1 = {t1}")));
    }
    let initial = vector::norm_sqr(psi);
    if t1 == t0 {
        return Ok(EvolutionReport::default());
    }
    let points = step_points(t0, t1, settings.dt, &generator.breakpoints());
    let mut ws = Workspace::new(psi.len());
    for w in points.windows(2) {
        let h = w[1] - w[0];
        exp_step(generator, 0.5 * (w[0] + w[1]), h, psi, &mut ws);
    }
    let drift = (vector::norm_sqr(psi) - initial).abs();
    if !(drift <= settings.norm_tolerance) {
        return Err(Error::NormDrift {
            drift,
            tolerance: settings.norm_tolerance,
            t0,
            t1,
        });
    }
    Ok(EvolutionReport {
        steps: points.len() - 1,
        norm_drift: drift,
    })
}

/// Out-of-place [`evolve_in_place`].
pub fn evolve<G: Generator + ?Sized>(
    psi: &[Complex64],
    generator: &G,
    t0: f64,
    t1: f64,
    settings: &EvolutionSettings,
) -> Result<(Vec<Complex64>, EvolutionReport)> {
    let mut out = psi.to_vec();
    let report = evolve_in_place(&mut out, generator, t0, t1, settings)?;
    Ok((out, report))
}

/// `|⟨a|b⟩|²`, insensitive to global phase.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(vector::inner(a, b).norm_sqr().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_points_cover_grid_and_breakpoints() {
        let p = step_points(0.0, 1.0, 0.25, &[0.6]);
        assert_eq!(p, vec![0.0, 0.25, 0.5, 0.6, 0.75, 1.0]);
        let p = step_points(0.1, 0.55, 0.25, &[]);
        assert_eq!(p, vec![0.1, 0.25, 0.5, 0.55]);
        // breakpoint on a grid point is not duplicated
        let p = step_points(0.0, 1.0, 0.25, &[0.5]);
        assert_eq!(p, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let p = step_points(0.0, 1e-3, 0.25, &[]);
        assert_eq!(p, vec![0.0, 1e-3]);
    }

    #[test]
    fn fidelity_properties() {
        let a = vector::probe_vector(5, 3);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-14);
        let phase = Complex64::from_polar(1.0, 0.7);
        let b: Vec<Complex64> = a.iter().map(|x| x * phase).collect();
        assert!((fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        let e0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let e1 = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert_eq!(fidelity(&e0, &e1).unwrap(), 0.0);
        assert!(fidelity(&e0, &a[..3]).is_err());
    }

    #[test]
    fn settings_validation() {
        assert!(EvolutionSettings::with_dt(0.0).validate().is_err());
        assert!(EvolutionSettings::with_dt(-1.0).validate().is_err());
        assert!(EvolutionSettings::default().validate().is_ok());
    }
}
