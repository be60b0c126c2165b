//! Piecewise-linear control schedules for the splitting and recombination
//! sweeps. Times are in units of `1/|χ|` (Bose-Josephson) or `1/|J₀|`
//! (Ising). Schedules are evaluated lazily so the integrator picks its own
//! grid; segment breakpoints are exposed so it can step onto them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on contiguity/continuity between adjacent segments.
const JOIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub value_start: f64,
    pub value_end: f64,
}

impl Segment {
    fn value_at(&self, t: f64) -> f64 {
        let span = self.t_end - self.t_start;
        if span <= 0.0 {
            return self.value_end;
        }
        let s = ((t - self.t_start) / span).clamp(0.0, 1.0);
        self.value_start + s * (self.value_end - self.value_start)
    }
}

/// Continuous piecewise-linear function of time starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct PiecewiseLinearSchedule {
    segments: Vec<Segment>,
}

impl TryFrom<Vec<Segment>> for PiecewiseLinearSchedule {
    type Error = crate::Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<PiecewiseLinearSchedule> for Vec<Segment> {
    fn from(s: PiecewiseLinearSchedule) -> Self {
        s.segments
    }
}

impl PiecewiseLinearSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| invalid("schedule needs at least one segment"))?;
        if first.t_start != 0.0 {
            return Err(invalid("schedule must start at t = 0"));
        }
        for (i, s) in segments.iter().enumerate() {
            let finite = [s.t_start, s.t_end, s.value_start, s.value_end]
                .iter()
                .all(|x| x.is_finite());
            if !finite {
                return Err(invalid(format!("segment {i} has non-finite entries")));
            }
            if s.t_end < s.t_start {
                return Err(invalid(format!("segment {i} runs backwards in time")));
            }
        }
        for (i, w) in segments.windows(2).enumerate() {
            if (w[0].t_end - w[1].t_start).abs() > JOIN_TOLERANCE * w[0].t_end.abs().max(1.0) {
                return Err(invalid(format!("segments {i} and {} are not contiguous", i + 1)));
            }
            if (w[0].value_end - w[1].value_start).abs()
                > JOIN_TOLERANCE * w[0].value_end.abs().max(1.0)
            {
                return Err(invalid(format!("segments {i} and {} are not continuous", i + 1)));
            }
        }
        Ok(Self { segments })
    }

    /// Linear interpolation through `(t, value)` knots; the first knot must
    /// be at `t = 0` and times must be non-decreasing.
    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(invalid("a schedule needs at least two knots"));
        }
        Self::new(
            knots
                .windows(2)
                .map(|w| Segment {
                    t_start: w[0].0,
                    t_end: w[1].0,
                    value_start: w[0].1,
                    value_end: w[1].1,
                })
                .collect(),
        )
    }

    pub fn constant(value: f64, duration: f64) -> Result<Self> {
        Self::from_knots(&[(0.0, value), (duration, value)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Value at `t`; clamped to the end values outside `[0, duration]`.
    pub fn evaluate(&self, t: f64) -> f64 {
        let first = &self.segments[0];
        if t <= first.t_start {
            return first.value_start;
        }
        // Segments are few (two for every sweep in use); a linear scan wins.
        for s in &self.segments {
            if t <= s.t_end {
                return s.value_at(t);
            }
        }
        self.segments.last().expect("non-empty").value_end
    }

    /// Interior segment boundaries.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments
            .iter()
            .take(self.segments.len().saturating_sub(1))
            .map(|s| s.t_end)
            .collect()
    }

    pub fn start_value(&self) -> f64 {
        self.segments[0].value_start
    }

    pub fn end_value(&self) -> f64 {
        self.segments.last().expect("non-empty").value_end
    }

    /// Time-mirrored schedule `t ↦ self(duration - t)`.
    pub fn reversed(&self) -> Self {
        let total = self.duration();
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                t_start: total - s.t_end,
                t_end: total - s.t_start,
                value_start: s.value_end,
                value_end: s.value_start,
            })
            .collect();
        Self { segments }
    }

    /// Prefix of the schedule ending at `t_end` (must be within range).
    pub fn truncated(&self, t_end: f64) -> Result<Self> {
        if !(0.0..=self.duration()).contains(&t_end) {
            return Err(invalid(format!(
                "truncation time {t_end} outside [0, {}]",
                self.duration()
            )));
        }
        let mut segments = Vec::new();
        for s in &self.segments {
            if s.t_start >= t_end && !segments.is_empty() {
                break;
            }
            let mut seg = *s;
            if seg.t_end > t_end {
                seg.value_end = s.value_at(t_end);
                seg.t_end = t_end;
            }
            segments.push(seg);
        }
        Self::new(segments)
    }

    /// Time at which a monotone schedule first reaches `value`, if it does.
    pub fn time_of_value(&self, value: f64) -> Option<f64> {
        for s in &self.segments {
            let (lo, hi) = if s.value_start <= s.value_end {
                (s.value_start, s.value_end)
            } else {
                (s.value_end, s.value_start)
            };
            if value >= lo && value <= hi {
                if s.value_end == s.value_start {
                    return Some(s.t_start);
                }
                let frac = (value - s.value_start) / (s.value_end - s.value_start);
                return Some(s.t_start + frac * (s.t_end - s.t_start));
            }
        }
        None
    }
}

/// `Ω(t)` for the two-rate Bose-Josephson splitting ramp:
/// `Ω₀ → Ω_c` at rate `β₁`, then `Ω_c → Ω_f` at rate `β₂`.
pub fn bj_splitting(
    omega_0: f64,
    omega_c: f64,
    omega_f: f64,
    beta_1: f64,
    beta_2: f64,
) -> Result<PiecewiseLinearSchedule> {
    if !(omega_0 > omega_c && omega_c > omega_f && omega_f >= 0.0) {
        return Err(invalid(format!(
            "splitting requires Ω₀ > Ω_c > Ω_f ≥ 0, got Ω₀ = {omega_0}, Ω_c = {omega_c}, Ω_f = {omega_f}"
        )));
    }
    check_rates(beta_1, beta_2)?;
    let tau_c = (omega_0 - omega_c) / beta_1;
    let tau = tau_c + (omega_c - omega_f) / beta_2;
    PiecewiseLinearSchedule::from_knots(&[(0.0, omega_0), (tau_c, omega_c), (tau, omega_f)])
}

/// `Ω′(t)` for the inverse ramp: `Ω_f → Ω_c` at rate `β₂`, then
/// `Ω_c → Ω_end` at rate `β₁`.
pub fn bj_recombination(
    omega_f: f64,
    omega_c: f64,
    omega_end: f64,
    beta_1: f64,
    beta_2: f64,
) -> Result<PiecewiseLinearSchedule> {
    if !(omega_f >= 0.0 && omega_f < omega_c && omega_c < omega_end) {
        return Err(invalid(format!(
            "recombination requires 0 ≤ Ω_f < Ω_c < Ω_end, got Ω_f = {omega_f}, Ω_c = {omega_c}, Ω_end = {omega_end}"
        )));
    }
    check_rates(beta_1, beta_2)?;
    let tau_c = (omega_c - omega_f) / beta_2;
    let tau = tau_c + (omega_end - omega_c) / beta_1;
    PiecewiseLinearSchedule::from_knots(&[(0.0, omega_f), (tau_c, omega_c), (tau, omega_end)])
}

fn check_rates(beta_1: f64, beta_2: f64) -> Result<()> {
    if !(beta_1 > 0.0 && beta_2 > 0.0 && beta_1.is_finite() && beta_2.is_finite()) {
        return Err(invalid(format!(
            "sweep rates must be positive and finite, got β₁ = {beta_1}, β₂ = {beta_2}"
        )));
    }
    Ok(())
}

/// Transverse field `B(t)` and coupling prefactor `J(t)` of an Ising sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingSchedules {
    pub field: PiecewiseLinearSchedule,
    pub coupling: PiecewiseLinearSchedule,
}

fn check_ising(b0: f64, j0: f64, tau: f64) -> Result<()> {
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(invalid(format!("B₀ must be positive, got {b0}")));
    }
    if !(j0 < 0.0 && j0.is_finite()) {
        return Err(invalid(format!("J₀ must be negative, got {j0}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("τ must be positive, got {tau}")));
    }
    Ok(())
}

/// Splitting: `J: 0 → J₀` at fixed `B₀` over `[0, τ/2]`, then
/// `B: B₀ → 0` at fixed `J₀` over `[τ/2, τ]`.
pub fn ising_splitting(b0: f64, j0: f64, tau: f64) -> Result<IsingSchedules> {
    check_ising(b0, j0, tau)?;
    let half = 0.5 * tau;
    Ok(IsingSchedules {
        field: PiecewiseLinearSchedule::from_knots(&[(0.0, b0), (half, b0), (tau, 0.0)])?,
        coupling: PiecewiseLinearSchedule::from_knots(&[(0.0, 0.0), (half, j0), (tau, j0)])?,
    })
}

/// Recombination: `B: 0 → B₀` at fixed `J₀` over `[0, τ/2]`, then
/// `J(t) = 2J₀(1 - t/τ)` at fixed `B₀` over `[τ/2, τ′]`. For `τ′ < τ`
/// the coupling stops at `J(τ′)` instead of reaching zero.
pub fn ising_recombination(b0: f64, j0: f64, tau: f64, tau_prime: f64) -> Result<IsingSchedules> {
    check_ising(b0, j0, tau)?;
    let half = 0.5 * tau;
    if !(tau_prime >= half && tau_prime.is_finite()) {
        return Err(invalid(format!(
            "recombination duration τ′ = {tau_prime} must be at least τ/2 = {half}"
        )));
    }
    if tau_prime > tau {
        return Err(invalid(format!(
            "recombination duration τ′ = {tau_prime} exceeds τ = {tau}"
        )));
    }
    let j_end = 2.0 * j0 * (1.0 - tau_prime / tau);
    Ok(IsingSchedules {
        field: PiecewiseLinearSchedule::from_knots(&[(0.0, 0.0), (half, b0), (tau_prime, b0)])?,
        coupling: PiecewiseLinearSchedule::from_knots(&[(0.0, j0), (half, j0), (tau_prime, j_end)])?,
    })
}
