use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::collective_spin::{
    apply_rotation_pulse, build_angular_momentum, build_bj_hamiltonian, build_jz_squared, imprint_in_place,
    parity_of_amplitudes, Axis, DickeState,
};
use crate::error::{invalid, Error, Result};
use crate::propagator::{
    check_hermitian, dense_matrix, evolve_in_place, fidelity, ground_state, EigenMethod, EvolutionSettings, Frozen,
    Generator, SweptGenerator,
};
use crate::schedule::{bj_recombination, bj_splitting, PiecewiseLinearSchedule};

use super::{Diagnostics, Interferometer, ProtocolOutcome};

fn default_chi() -> f64 {
    -1.0
}
fn default_omega_0() -> f64 {
    11.0
}
fn default_beta_1() -> f64 {
    0.1
}
fn default_beta_2() -> f64 {
    0.005
}
fn default_axis() -> Axis {
    Axis::X
}
fn default_angle() -> f64 {
    FRAC_PI_2
}

/// Bose-Josephson interferometer, `H = -Ω Ĵx + (χ/N) Ĵz²` with critical
/// coupling `Ω_c = |χ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BjProtocolConfig {
    pub n: usize,
    #[serde(default = "default_chi")]
    pub chi: f64,
    #[serde(default = "default_omega_0")]
    pub omega_0: f64,
    #[serde(default)]
    pub omega_f: f64,
    #[serde(default = "default_beta_1")]
    pub beta_1: f64,
    #[serde(default = "default_beta_2")]
    pub beta_2: f64,
    /// Recombination endpoint in `(Ω_c, Ω₀]`; `None` means "optimize".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_end: Option<f64>,
    #[serde(default = "default_axis")]
    pub pulse_axis: Axis,
    #[serde(default = "default_angle")]
    pub pulse_angle: f64,
    #[serde(default)]
    pub phi: f64,
}

impl BjProtocolConfig {
    /// Defaults for everything but `N` and `Ω_f`.
    pub fn new(n: usize, omega_f: f64) -> Self {
        Self {
            n,
            chi: default_chi(),
            omega_0: default_omega_0(),
            omega_f,
            beta_1: default_beta_1(),
            beta_2: default_beta_2(),
            omega_end: None,
            pulse_axis: default_axis(),
            pulse_angle: default_angle(),
            phi: 0.0,
        }
    }

    pub fn omega_c(&self) -> f64 {
        self.chi.abs()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n: particle number must be at least 1"));
        }
        if !(self.chi.is_finite() && self.chi != 0.0) {
            return Err(invalid(format!("chi: must be finite and nonzero, got {}", self.chi)));
        }
        let omega_c = self.omega_c();
        if !(self.omega_0.is_finite() && self.omega_0 > omega_c) {
            return Err(invalid(format!(
                "omega_0: must exceed Ω_c = |χ| = {omega_c}, got {}",
                self.omega_0
            )));
        }
        if !(self.omega_f >= 0.0 && self.omega_f < omega_c) {
            return Err(invalid(format!(
                "omega_f: must satisfy 0 ≤ Ω_f < Ω_c = {omega_c}, got {}",
                self.omega_f
            )));
        }
        if !(self.beta_1 > 0.0 && self.beta_1.is_finite() && self.beta_2 > 0.0 && self.beta_2.is_finite()) {
            return Err(invalid(format!(
                "beta_1, beta_2: sweep rates must be positive, got {} and {}",
                self.beta_1, self.beta_2
            )));
        }
        if let Some(end) = self.omega_end {
            if !(end > omega_c && end <= self.omega_0) {
                return Err(invalid(format!(
                    "omega_end: must satisfy Ω_c < Ω_end ≤ Ω₀ = {}, got {end}",
                    self.omega_0
                )));
            }
        }
        if !self.pulse_angle.is_finite() {
            return Err(invalid("pulse_angle: must be finite"));
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi: must be finite"));
        }
        Ok(())
    }
}

/// Stage-one adiabaticity monitor: the population of the instantaneous
/// even-parity ground state must stay above `threshold` at `samples`
/// equally spaced times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticityCheck {
    pub samples: usize,
    pub threshold: f64,
}

impl Default for AdiabaticityCheck {
    fn default() -> Self {
        Self {
            samples: 60,
            threshold: 0.99,
        }
    }
}

fn bj_generator(n: usize, chi: f64, omega: PiecewiseLinearSchedule) -> Result<SweptGenerator> {
    let minus_jx = build_angular_momentum(n, Axis::X)?.scaled(-1.0);
    let nonlinear = build_jz_squared(n)?.scaled(chi / n as f64);
    let unit = PiecewiseLinearSchedule::constant(1.0, omega.duration())?;
    let g = SweptGenerator::pair(omega, Arc::new(minus_jx), unit, Arc::new(nonlinear))?;
    check_hermitian(&g, 0.0, 4, 1e-10)?;
    Ok(g)
}

/// Lowest state of `H(t)` restricted to the parity-even sector.
fn even_ground_state<G: Generator + ?Sized>(g: &G, t: f64) -> Vec<Complex64> {
    let h = dense_matrix(&Frozen { generator: g, time: t }).map(|z| z.re);
    let d = h.nrows();
    let m = d.div_ceil(2);
    let mut u = DMatrix::<f64>::zeros(d, m);
    for a in 0..m {
        if a == d - 1 - a {
            u[(a, a)] = 1.0;
        } else {
            u[(a, a)] = std::f64::consts::FRAC_1_SQRT_2;
            u[(d - 1 - a, a)] = std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    let block = u.transpose() * &h * &u;
    let eig = block.symmetric_eigen();
    let lowest = (0..m)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .expect("non-empty block");
    let v = &u * eig.eigenvectors.column(lowest);
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Split-once, recombine-many Bose-Josephson engine.
///
/// Every recombination runs on the sweep that ends at `Ω₀` and stops when
/// `Ω′(t)` reaches the requested endpoint, so different endpoints share
/// one trajectory.
#[derive(Clone)]
pub struct BjInterferometer {
    config: BjProtocolConfig,
    settings: EvolutionSettings,
    splitting: PiecewiseLinearSchedule,
    recombination: SweptGenerator,
    recombination_kink: f64,
    initial: Vec<Complex64>,
    split: Vec<Complex64>,
    split_diagnostics: Diagnostics,
}

impl BjInterferometer {
    pub fn new(config: &BjProtocolConfig, settings: &EvolutionSettings) -> Result<Self> {
        Self::with_check(config, settings, None)
    }

    /// As [`BjInterferometer::new`], failing with [`Error::Adiabaticity`]
    /// if the splitting sweep leaves the even ground state.
    pub fn with_check(
        config: &BjProtocolConfig,
        settings: &EvolutionSettings,
        check: Option<AdiabaticityCheck>,
    ) -> Result<Self> {
        config.validate()?;
        settings.validate()?;
        let n = config.n;
        let omega_c = config.omega_c();
        let h0 = build_bj_hamiltonian(n, config.omega_0, config.chi)?;
        let initial = ground_state(&h0, EigenMethod::Auto)?.state;

        let splitting = bj_splitting(config.omega_0, omega_c, config.omega_f, config.beta_1, config.beta_2)?;
        let split_gen = bj_generator(n, config.chi, splitting.clone())?;
        let mut split = initial.clone();
        let p0 = parity_of_amplitudes(&split);
        let duration = splitting.duration();
        let stops: Vec<f64> = match check {
            Some(c) if c.samples > 0 => (1..=c.samples).map(|i| duration * i as f64 / c.samples as f64).collect(),
            _ => vec![duration],
        };
        let mut drift = 0.0f64;
        let mut t = 0.0;
        for &stop in &stops {
            let report = evolve_in_place(&mut split, &split_gen, t, stop, settings)?;
            drift += report.norm_drift;
            t = stop;
            if let Some(c) = check {
                let g = even_ground_state(&split_gen, t);
                let population = fidelity(&g, &split)?;
                if population < c.threshold {
                    return Err(Error::Adiabaticity {
                        time: t,
                        population,
                        threshold: c.threshold,
                    });
                }
            }
        }
        let split_diagnostics = Diagnostics {
            norm_drift: drift,
            parity_drift: (parity_of_amplitudes(&split) - p0).abs(),
            roundtrip_fidelity: None,
        };

        let full = bj_recombination(config.omega_f, omega_c, config.omega_0, config.beta_1, config.beta_2)?;
        let recombination_kink = full.breakpoints()[0];
        let recombination = bj_generator(n, config.chi, full)?;
        Ok(Self {
            config: config.clone(),
            settings: *settings,
            splitting,
            recombination,
            recombination_kink,
            initial,
            split,
            split_diagnostics,
        })
    }

    pub fn config(&self) -> &BjProtocolConfig {
        &self.config
    }

    pub fn settings(&self) -> &EvolutionSettings {
        &self.settings
    }

    /// Replaces the default endpoint used by [`Interferometer::run`].
    pub fn set_omega_end(&mut self, omega_end: Option<f64>) -> Result<()> {
        let mut c = self.config.clone();
        c.omega_end = omega_end;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    pub fn initial_state(&self) -> DickeState {
        DickeState::from_evolved(self.config.n, self.initial.clone())
    }

    pub fn split_state(&self) -> DickeState {
        DickeState::from_evolved(self.config.n, self.split.clone())
    }

    pub fn splitting_diagnostics(&self) -> Diagnostics {
        self.split_diagnostics
    }

    pub fn splitting_duration(&self) -> f64 {
        self.splitting.duration()
    }

    /// Duration of the recombination sweep that ends at `omega_end`.
    pub fn recombination_duration(&self, omega_end: f64) -> Result<f64> {
        self.check_endpoint(omega_end)?;
        Ok(self.time_of(omega_end))
    }

    /// Time at which the full inverse sweep passes `omega ≥ Ω_c`.
    fn time_of(&self, omega: f64) -> f64 {
        self.recombination_kink + (omega - self.config.omega_c()) / self.config.beta_1
    }

    fn check_endpoint(&self, omega_end: f64) -> Result<()> {
        if !(omega_end > self.config.omega_c() && omega_end <= self.config.omega_0) {
            return Err(invalid(format!(
                "omega_end: must satisfy Ω_c < Ω_end ≤ Ω₀ = {}, got {omega_end}",
                self.config.omega_0
            )));
        }
        Ok(())
    }

    fn imprinted(&self, phi: f64) -> Vec<Complex64> {
        let mut psi = self.split.clone();
        imprint_in_place(self.config.n, &mut psi, phi);
        psi
    }

    /// Pre-pulse states after imprinting `phi` and recombining to each
    /// endpoint, in input order, plus diagnostics of the whole run.
    pub fn recombine_checkpoints(&self, phi: f64, omega_ends: &[f64]) -> Result<(Vec<Vec<Complex64>>, Diagnostics)> {
        for &w in omega_ends {
            self.check_endpoint(w)?;
        }
        self.checkpoints_from_critical(phi, omega_ends)
    }

    /// As [`Self::recombine_checkpoints`] but also accepting `Ω_c` itself.
    pub(crate) fn checkpoints_from_critical(
        &self,
        phi: f64,
        omega_ends: &[f64],
    ) -> Result<(Vec<Vec<Complex64>>, Diagnostics)> {
        if let Some(w) = omega_ends
            .iter()
            .find(|&&w| !(w >= self.config.omega_c() && w <= self.config.omega_0))
        {
            return Err(invalid(format!("omega_end: {w} outside [Ω_c, Ω₀]")));
        }
        let mut order: Vec<usize> = (0..omega_ends.len()).collect();
        order.sort_by(|&a, &b| omega_ends[a].total_cmp(&omega_ends[b]));
        let times: Vec<f64> = omega_ends.iter().map(|&w| self.time_of(w)).collect();
        let mut psi = self.imprinted(phi);
        let p0 = parity_of_amplitudes(&psi);
        let mut out = vec![Vec::new(); omega_ends.len()];
        let mut t = 0.0;
        let mut drift = self.split_diagnostics.norm_drift;
        let mut parity_drift = self.split_diagnostics.parity_drift;
        for idx in order {
            let report = evolve_in_place(&mut psi, &self.recombination, t, times[idx], &self.settings)?;
            drift = drift.max(report.norm_drift);
            parity_drift = parity_drift.max((parity_of_amplitudes(&psi) - p0).abs());
            t = times[idx];
            out[idx] = psi.clone();
        }
        Ok((
            out,
            Diagnostics {
                norm_drift: drift,
                parity_drift,
                roundtrip_fidelity: None,
            },
        ))
    }

    /// Continues a recombination from endpoint `from` to endpoint `to ≥ from`.
    /// `from` may be `Ω_c`, the start of the second ramp.
    pub fn continue_recombination(&self, state: &[Complex64], from: f64, to: f64) -> Result<Vec<Complex64>> {
        if from != self.config.omega_c() {
            self.check_endpoint(from)?;
        }
        self.check_endpoint(to)?;
        let (t0, t1) = (self.time_of(from), self.time_of(to));
        let mut psi = state.to_vec();
        evolve_in_place(&mut psi, &self.recombination, t0, t1, &self.settings)?;
        Ok(psi)
    }

    /// `(⟨Ĵz⟩, ⟨Ĵz²⟩)` after the configured pulse.
    pub fn readout(&self, pre_pulse: &[Complex64]) -> (f64, f64) {
        self.pulsed(pre_pulse).jz_moments()
    }

    fn pulsed(&self, pre_pulse: &[Complex64]) -> DickeState {
        let s = DickeState::from_evolved(self.config.n, pre_pulse.to_vec());
        if self.config.pulse_angle == 0.0 {
            s
        } else {
            apply_rotation_pulse(&s, self.config.pulse_axis, self.config.pulse_angle)
        }
    }

    /// Full pipeline at an explicit endpoint; the post-pulse state is kept.
    pub fn run_at(&self, phi: f64, omega_end: f64) -> Result<ProtocolOutcome> {
        let (mut states, diagnostics) = self.recombine_checkpoints(phi, &[omega_end])?;
        let final_state = self.pulsed(&states.pop().expect("one checkpoint"));
        let (mean, second_moment) = final_state.jz_moments();
        Ok(ProtocolOutcome {
            mean,
            second_moment,
            variance: second_moment - mean * mean,
            final_state: Some(final_state.into_amplitudes()),
            diagnostics,
        })
    }

    /// `|⟨ψ_initial|ψ_recombined⟩|²` at `φ = 0` after the full inverse sweep.
    pub fn roundtrip_fidelity(&self) -> Result<f64> {
        let (states, _) = self.recombine_checkpoints(0.0, &[self.config.omega_0])?;
        fidelity(&self.initial, &states[0])
    }
}

impl Interferometer for BjInterferometer {
    fn n_particles(&self) -> usize {
        self.config.n
    }

    fn run(&self, phi: f64) -> Result<ProtocolOutcome> {
        let end = self
            .config
            .omega_end
            .ok_or_else(|| invalid("omega_end: unresolved; optimize the endpoint first"))?;
        let mut out = self.run_at(phi, end)?;
        out.final_state = None;
        Ok(out)
    }
}

/// One pipeline run. An unset `omega_end` is first optimized.
pub fn run_bj(config: &BjProtocolConfig, settings: &EvolutionSettings) -> Result<ProtocolOutcome> {
    let mut engine = BjInterferometer::new(config, settings)?;
    if config.omega_end.is_none() {
        let best = crate::analysis::optimize_bj_endpoint(&engine, &crate::analysis::EndpointSearch::default())?;
        engine.set_omega_end(Some(best.argument))?;
    }
    let end = engine.config().omega_end.expect("resolved");
    engine.run_at(config.phi, end)
}

/// Fidelity between the prepared state and the state after splitting and
/// the full inverse sweep back to `Ω₀`, at `φ = 0`.
pub fn bj_roundtrip_fidelity(config: &BjProtocolConfig, settings: &EvolutionSettings) -> Result<f64> {
    if config.phi != 0.0 {
        return Err(invalid("phi: round trip requires φ = 0"));
    }
    if config.omega_end.is_some_and(|w| w != config.omega_0) {
        return Err(invalid("omega_end: round trip requires Ω_end = Ω₀"));
    }
    BjInterferometer::new(config, settings)?.roundtrip_fidelity()
}

/// The entangled state after the splitting sweep.
pub fn bj_splitting_state(config: &BjProtocolConfig, settings: &EvolutionSettings) -> Result<DickeState> {
    Ok(BjInterferometer::new(config, settings)?.split_state())
}

/// `(t, even ground-state population)` at `samples` equally spaced times of
/// the splitting sweep.
pub fn bj_splitting_adiabaticity(
    config: &BjProtocolConfig,
    settings: &EvolutionSettings,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    settings.validate()?;
    if samples == 0 {
        return Err(invalid("samples: must be at least 1"));
    }
    let h0 = build_bj_hamiltonian(config.n, config.omega_0, config.chi)?;
    let mut psi = ground_state(&h0, EigenMethod::Auto)?.state;
    let splitting = bj_splitting(config.omega_0, config.omega_c(), config.omega_f, config.beta_1, config.beta_2)?;
    let duration = splitting.duration();
    let g = bj_generator(config.n, config.chi, splitting)?;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(samples);
    for i in 1..=samples {
        let stop = duration * i as f64 / samples as f64;
        evolve_in_place(&mut psi, &g, t, stop, settings)?;
        t = stop;
        out.push((t, fidelity(&even_ground_state(&g, t), &psi)?));
    }
    Ok(out)
}
