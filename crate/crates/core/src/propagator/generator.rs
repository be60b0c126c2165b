use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::schedule::PiecewiseLinearSchedule;
use crate::vector;

/// A time-independent Hermitian operator acting matrix-free.
pub trait HermitianOperator: Send + Sync {
    fn dimension(&self) -> usize;

    /// `y += coefficient · H x`.
    fn apply_add(&self, coefficient: f64, x: &[Complex64], y: &mut [Complex64]);

    /// An upper bound on the spectral radius.
    fn norm_bound(&self) -> f64;

    /// `(diagonal, superdiagonal)` if the operator is a real symmetric
    /// tridiagonal matrix; enables a fused single-pass product.
    fn real_band(&self) -> Option<(&[f64], &[f64])> {
        None
    }
}

/// `y += (c₁B₁ + c₂B₂) x` for real symmetric tridiagonal bands
/// `B_j = (diagonal_j, upper_j)`, in one pass over `x`.
pub fn apply_real_band(bands: [(f64, &[f64], &[f64]); 2], x: &[Complex64], y: &mut [Complex64]) {
    let d = x.len();
    let [(c1, d1, u1), (c2, d2, u2)] = bands;
    if d == 1 {
        y[0] += x[0] * (c1 * d1[0] + c2 * d2[0]);
        return;
    }
    let (d1, d2, y) = (&d1[..d], &d2[..d], &mut y[..d]);
    let (u1, u2) = (&u1[..d - 1], &u2[..d - 1]);
    let mut lower = 0.0;
    for k in 0..d - 1 {
        let u = c1 * u1[k] + c2 * u2[k];
        let dk = c1 * d1[k] + c2 * d2[k];
        let prev = if k > 0 { x[k - 1] } else { Complex64::new(0.0, 0.0) };
        y[k] += x[k] * dk + x[k + 1] * u + prev * lower;
        lower = u;
    }
    y[d - 1] += x[d - 1] * (c1 * d1[d - 1] + c2 * d2[d - 1]) + x[d - 2] * lower;
}

/// Hermitian action of `H(t)`; implementors must be Hermitian at every `t`.
pub trait Generator: Send + Sync {
    fn dimension(&self) -> usize;

    /// `output = H(t) · input`.
    fn apply(&self, t: f64, input: &[Complex64], output: &mut [Complex64]);

    /// Upper bound on `‖H(t)‖`, used to size exponential substeps.
    fn norm_bound(&self, t: f64) -> f64;

    /// Times at which `H(t)` has kinks; integrators step exactly onto them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `H(t) = Σ_k R_k(t) H_k`: any number of scheduled Hermitian terms.
#[derive(Clone)]
pub struct SweptGenerator {
    dimension: usize,
    terms: Vec<(PiecewiseLinearSchedule, Arc<dyn HermitianOperator>)>,
    all_real_band: bool,
}

impl SweptGenerator {
    pub fn new(terms: Vec<(PiecewiseLinearSchedule, Arc<dyn HermitianOperator>)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| invalid("a generator needs at least one term"))?;
        let dimension = first.1.dimension();
        for (_, op) in &terms {
            if op.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: op.dimension(),
                });
            }
        }
        let all_real_band = terms.iter().all(|(_, op)| op.real_band().is_some());
        Ok(Self {
            dimension,
            terms,
            all_real_band,
        })
    }

    /// Two-term form `R₁(t) H₁ + R₂(t) H₂`.
    pub fn pair(
        r1: PiecewiseLinearSchedule,
        h1: Arc<dyn HermitianOperator>,
        r2: PiecewiseLinearSchedule,
        h2: Arc<dyn HermitianOperator>,
    ) -> Result<Self> {
        Self::new(vec![(r1, h1), (r2, h2)])
    }

    pub fn terms(&self) -> &[(PiecewiseLinearSchedule, Arc<dyn HermitianOperator>)] {
        &self.terms
    }

    /// Coefficients `R_k(t)`.
    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        self.terms.iter().map(|(r, _)| r.evaluate(t)).collect()
    }
}

impl Generator for SweptGenerator {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn apply(&self, t: f64, input: &[Complex64], output: &mut [Complex64]) {
        output.iter_mut().for_each(|y| *y = Complex64::new(0.0, 0.0));
        if self.all_real_band && self.terms.len() == 2 {
            let band = |i: usize| {
                let (r, op) = &self.terms[i];
                let (d, u) = op.real_band().expect("checked at construction");
                (r.evaluate(t), d, u)
            };
            apply_real_band([band(0), band(1)], input, output);
            return;
        }
        for (schedule, op) in &self.terms {
            op.apply_add(schedule.evaluate(t), input, output);
        }
    }

    fn norm_bound(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(r, op)| r.evaluate(t).abs() * op.norm_bound())
            .sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut points: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|(r, _)| r.breakpoints())
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }
}

/// A generator frozen at a fixed time.
pub struct Frozen<'a, G: Generator + ?Sized> {
    pub generator: &'a G,
    pub time: f64,
}

impl<G: Generator + ?Sized> HermitianOperator for Frozen<'_, G> {
    fn dimension(&self) -> usize {
        self.generator.dimension()
    }

    fn apply_add(&self, coefficient: f64, x: &[Complex64], y: &mut [Complex64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); x.len()];
        self.generator.apply(self.time, x, &mut tmp);
        for (yi, ti) in y.iter_mut().zip(tmp) {
            *yi += ti * coefficient;
        }
    }

    fn norm_bound(&self) -> f64 {
        self.generator.norm_bound(self.time)
    }
}

/// Statistical hermiticity check: `⟨u|H v⟩ = conj(⟨v|H u⟩)` on `samples`
/// deterministic probe pairs, within `tolerance` relative to `‖H‖`.
pub fn check_hermitian<G: Generator + ?Sized>(
    generator: &G,
    t: f64,
    samples: usize,
    tolerance: f64,
) -> Result<()> {
    let d = generator.dimension();
    let scale = generator.norm_bound(t).max(1.0);
    let mut hu = vec![Complex64::new(0.0, 0.0); d];
    let mut hv = vec![Complex64::new(0.0, 0.0); d];
    for s in 0..samples as u64 {
        let u = vector::probe_vector(d, 2 * s);
        let v = vector::probe_vector(d, 2 * s + 1);
        generator.apply(t, &u, &mut hu);
        generator.apply(t, &v, &mut hv);
        let lhs = vector::inner(&u, &hv);
        let rhs = vector::inner(&v, &hu).conj();
        if (lhs - rhs).norm() > tolerance * scale {
            return Err(invalid(format!(
                "generator is not Hermitian at t = {t}: |<u|Hv> - <v|Hu>*| = {:.3e}",
                (lhs - rhs).norm()
            )));
        }
    }
    Ok(())
}
