use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::protocol::{BjInterferometer, IsingInterferometer};

use super::{probe_phase_step, propagate_error};

/// Recombination engines whose sweeps for different endpoints share a
/// trajectory. Endpoints are the BJ coupling `Ω_end` or the Ising duration
/// `τ′`; both grow along the trajectory.
pub trait Recombiner: Sync {
    fn n_particles(&self) -> usize;

    /// `(lo, hi)`: states exist on `[lo, hi]`, readouts on `(lo, hi]`.
    fn endpoint_range(&self) -> (f64, f64);

    /// States after imprinting `phi` and recombining to each endpoint.
    fn states_at(&self, phi: f64, endpoints: &[f64]) -> Result<Vec<Vec<Complex64>>>;

    fn resume(&self, state: &[Complex64], from: f64, to: f64) -> Result<Vec<Complex64>>;

    /// Readout moments `(mean, second moment)`.
    fn moments(&self, state: &[Complex64]) -> (f64, f64);
}

impl Recombiner for BjInterferometer {
    fn n_particles(&self) -> usize {
        self.config().n
    }

    fn endpoint_range(&self) -> (f64, f64) {
        (self.config().omega_c(), self.config().omega_0)
    }

    fn states_at(&self, phi: f64, endpoints: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        Ok(self.checkpoints_from_critical(phi, endpoints)?.0)
    }

    fn resume(&self, state: &[Complex64], from: f64, to: f64) -> Result<Vec<Complex64>> {
        self.continue_recombination(state, from, to)
    }

    fn moments(&self, state: &[Complex64]) -> (f64, f64) {
        self.readout(state)
    }
}

impl Recombiner for IsingInterferometer {
    fn n_particles(&self) -> usize {
        self.config().n
    }

    fn endpoint_range(&self) -> (f64, f64) {
        (0.5 * self.config().tau, self.config().tau)
    }

    fn states_at(&self, phi: f64, endpoints: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        Ok(self.recombine_checkpoints(phi, endpoints)?.0)
    }

    fn resume(&self, state: &[Complex64], from: f64, to: f64) -> Result<Vec<Complex64>> {
        self.continue_recombination(state, from, to)
    }

    fn moments(&self, state: &[Complex64]) -> (f64, f64) {
        self.readout(state)
    }
}

/// Search settings for [`optimize_bj_endpoint`] and
/// [`optimize_ising_tau_prime`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointSearch {
    /// Grid points on `(lo, hi]`.
    pub grid_points: usize,
    /// Defaults to the engine's full range.
    pub bracket: Option<(f64, f64)>,
    /// Golden-section stopping width.
    pub tolerance: f64,
    /// Finite-difference probe; defaults to `0.01/N`.
    pub delta: Option<f64>,
}

impl Default for EndpointSearch {
    fn default() -> Self {
        Self {
            grid_points: 201,
            bracket: None,
            tolerance: 1e-6,
            delta: None,
        }
    }
}

/// Minimizer of `Δφ(φ = 0)` over the endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointOptimum {
    pub argument: f64,
    pub delta_phi: f64,
    /// `(endpoint, Δφ)` on the coarse grid.
    pub grid: Vec<(f64, f64)>,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[a, b]`; returns every evaluated point.
fn golden<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut seen = Vec::new();
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    seen.push((c, fc));
    seen.push((d, fd));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            seen.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            seen.push((d, fd));
        }
    }
    Ok(seen)
}

/// Smallest value; ties go to the smaller argument.
fn best(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    points
        .iter()
        .copied()
        .filter(|p| p.1.is_finite())
        .min_by(|p, q| p.1.total_cmp(&q.1).then(p.0.total_cmp(&q.0)))
}

/// Grid scan of `f` over `[lo, hi]` followed by golden-section refinement
/// between the neighbours of the best grid point.
pub fn minimize_on_bracket<F>(f: F, lo: f64, hi: f64, grid_points: usize, tolerance: f64) -> Result<EndpointOptimum>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo < hi) || grid_points < 3 || !(tolerance > 0.0) {
        return Err(invalid("minimize_on_bracket: need lo < hi, at least 3 grid points, tolerance > 0"));
    }
    let xs = super::linear_grid(lo, hi, grid_points);
    let grid = xs.iter().map(|&x| Ok((x, f(x)?))).collect::<Result<Vec<_>>>()?;
    let (x0, _) = best(&grid).ok_or_else(|| Error::Optimization("objective is infinite on the whole grid".into()))?;
    let i = xs.iter().position(|&x| x == x0).expect("grid point");
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(xs.len() - 1)];
    let refined = golden(&f, a, b, tolerance)?;
    let mut all = grid.clone();
    all.extend(refined.iter().copied());
    let (argument, delta_phi) = best(&all).expect("grid has a finite point");
    Ok(EndpointOptimum {
        argument,
        delta_phi,
        evaluations: all.len(),
        grid,
    })
}

fn optimize<R: Recombiner + ?Sized>(engine: &R, search: &EndpointSearch) -> Result<EndpointOptimum> {
    let n = engine.n_particles();
    let (range_lo, range_hi) = engine.endpoint_range();
    let (lo, hi) = search.bracket.unwrap_or((range_lo, range_hi));
    if !(lo >= range_lo && hi <= range_hi && lo < hi) {
        return Err(invalid(format!(
            "endpoint bracket [{lo}, {hi}] must lie within [{range_lo}, {range_hi}]"
        )));
    }
    if search.grid_points < 2 || !(search.tolerance > 0.0) {
        return Err(invalid("endpoint search needs at least 2 grid points and a positive tolerance"));
    }
    let delta = search.delta.unwrap_or_else(|| probe_phase_step(n));
    let g = search.grid_points;
    let xs: Vec<f64> = (0..g).map(|i| lo + (hi - lo) * (i + 1) as f64 / g as f64).collect();
    let mut stops = vec![lo];
    stops.extend(&xs);

    let phis = [0.0, delta, -delta];
    let trajectories = phis
        .par_iter()
        .map(|&phi| engine.states_at(phi, &stops))
        .collect::<Result<Vec<_>>>()?;
    let objective = |states: [&[Complex64]; 3]| {
        let (m0, s0) = engine.moments(states[0]);
        let (mp, _) = engine.moments(states[1]);
        let (mm, _) = engine.moments(states[2]);
        propagate_error(s0 - m0 * m0, mp, mm, delta, n)
    };
    let grid: Vec<(f64, f64)> = (1..stops.len())
        .map(|k| {
            (
                stops[k],
                objective([&trajectories[0][k], &trajectories[1][k], &trajectories[2][k]]),
            )
        })
        .collect();
    let (x0, _) = best(&grid).ok_or_else(|| {
        Error::Optimization(format!(
            "Δφ is infinite at every endpoint in ({lo}, {hi}] (N = {n}); the signal slope is below the derivative floor"
        ))
    })?;
    let i = xs.iter().position(|&x| x == x0).expect("grid point");

    // Refine between the neighbours, resuming from the nearest stored state
    // at or below each probe.
    let left = stops[i];
    let right = xs[(i + 1).min(g - 1)];
    let mut cache: Vec<(f64, [Vec<Complex64>; 3])> = vec![(
        left,
        [
            trajectories[0][i].clone(),
            trajectories[1][i].clone(),
            trajectories[2][i].clone(),
        ],
    )];
    let mut eval = |x: f64| -> Result<f64> {
        let (from, states) = cache
            .iter()
            .filter(|(a, _)| *a <= x)
            .max_by(|p, q| p.0.total_cmp(&q.0))
            .expect("left bracket is cached");
        let from = *from;
        let next = states
            .par_iter()
            .map(|s| if from == x { Ok(s.clone()) } else { engine.resume(s, from, x) })
            .collect::<Result<Vec<_>>>()?;
        let value = objective([&next[0], &next[1], &next[2]]);
        let [s0, s1, s2]: [Vec<Complex64>; 3] = next.try_into().expect("three trajectories");
        cache.push((x, [s0, s1, s2]));
        Ok(value)
    };
    let refined = if right > left { golden(&mut eval, left, right, search.tolerance)? } else { Vec::new() };
    let mut all = grid.clone();
    all.extend(refined.iter().copied().filter(|p| p.0 > lo));
    let (argument, delta_phi) = best(&all).expect("grid has a finite point");
    Ok(EndpointOptimum {
        argument,
        delta_phi,
        evaluations: all.len(),
        grid,
    })
}

/// Minimizes `Δφ(φ = 0)` over the recombination endpoint `Ω_end`.
pub fn optimize_bj_endpoint(engine: &BjInterferometer, search: &EndpointSearch) -> Result<EndpointOptimum> {
    optimize(engine, search)
}

/// Minimizes `Δφ(φ = 0)` over the recombination duration `τ′`.
pub fn optimize_ising_tau_prime(engine: &IsingInterferometer, search: &EndpointSearch) -> Result<EndpointOptimum> {
    optimize(engine, search)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_objective_minimizer() {
        let opt = minimize_on_bracket(|x| Ok((x - 2.345).powi(2) + 1.0), 1.0, 11.0, 21, 1e-8).unwrap();
        assert!((opt.argument - 2.345).abs() < 1e-6, "{opt:?}");
        assert!((opt.delta_phi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_smaller_argument() {
        let opt = minimize_on_bracket(|_| Ok(1.0), 0.0, 1.0, 5, 1e-3).unwrap();
        assert_eq!(opt.argument, 0.0);
    }

    #[test]
    fn all_infinite_objective_fails() {
        let r = minimize_on_bracket(|_| Ok(f64::INFINITY), 0.0, 1.0, 5, 1e-3);
        assert!(matches!(r, Err(Error::Optimization(_))));
    }

    #[test]
    fn golden_section_brackets_minimum() {
        let pts = golden(|x| Ok((x - 0.3).abs()), 0.0, 1.0, 1e-9).unwrap();
        let (x, _) = best(&pts).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
    }
}
