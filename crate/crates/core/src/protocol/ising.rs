use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ising::{
    build_ising_diagonals, coherent_x_state, flip_parity_of, imprint_in_place, mz_moments_of, CouplingRange,
    CouplingTerm, SpinChainState, TransverseFieldTerm, MAX_SPINS,
};
use crate::propagator::{check_hermitian, evolve_in_place, fidelity, EvolutionSettings, SweptGenerator};
use crate::schedule::{ising_recombination, ising_splitting, IsingSchedules};

use super::{Diagnostics, Interferometer, ProtocolOutcome};

fn default_b0() -> f64 {
    1.0
}
fn default_j0() -> f64 {
    -1.0
}
fn default_power() -> f64 {
    3.0
}

/// Transverse-field Ising interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingProtocolConfig {
    pub n: usize,
    #[serde(default = "default_b0")]
    pub b0: f64,
    #[serde(default = "default_j0")]
    pub j0: f64,
    pub tau: f64,
    /// Recombination duration in `[τ/2, τ]`; `None` means `τ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_prime: Option<f64>,
    #[serde(default = "default_power")]
    pub coupling_power: f64,
    /// Largest coupled separation; `None` couples all pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_range: Option<usize>,
    #[serde(default)]
    pub phi: f64,
}

impl IsingProtocolConfig {
    pub fn new(n: usize, tau: f64) -> Self {
        Self {
            n,
            b0: default_b0(),
            j0: default_j0(),
            tau,
            tau_prime: None,
            coupling_power: default_power(),
            coupling_range: None,
            phi: 0.0,
        }
    }

    pub fn resolved_tau_prime(&self) -> f64 {
        self.tau_prime.unwrap_or(self.tau)
    }

    pub fn range(&self) -> CouplingRange {
        self.coupling_range.map_or(CouplingRange::Full, CouplingRange::Truncated)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_SPINS {
            return Err(invalid(format!("n: spin count must be in 1..={MAX_SPINS}, got {}", self.n)));
        }
        if !(self.b0 > 0.0 && self.b0.is_finite()) {
            return Err(invalid(format!("b0: must be positive, got {}", self.b0)));
        }
        if !(self.j0 < 0.0 && self.j0.is_finite()) {
            return Err(invalid(format!("j0: must be negative, got {}", self.j0)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau: must be positive, got {}", self.tau)));
        }
        if let Some(tp) = self.tau_prime {
            if !(tp >= 0.5 * self.tau && tp <= self.tau) {
                return Err(invalid(format!(
                    "tau_prime: must lie in [τ/2, τ] = [{}, {}], got {tp}",
                    0.5 * self.tau,
                    self.tau
                )));
            }
        }
        if !self.coupling_power.is_finite() {
            return Err(invalid("coupling_power: must be finite"));
        }
        if self.coupling_range == Some(0) {
            return Err(invalid("coupling_range: must be at least 1"));
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi: must be finite"));
        }
        Ok(())
    }
}

/// Split-once, recombine-many Ising engine. Recombinations of different
/// duration `τ′` are prefixes of the `τ′ = τ` sweep and share it.
#[derive(Clone)]
pub struct IsingInterferometer {
    config: IsingProtocolConfig,
    settings: EvolutionSettings,
    recombination: SweptGenerator,
    initial: Vec<Complex64>,
    split: Vec<Complex64>,
    split_diagnostics: Diagnostics,
}

fn ising_generator(
    schedules: IsingSchedules,
    coupling: &Arc<CouplingTerm>,
    field: TransverseFieldTerm,
) -> Result<SweptGenerator> {
    let g = SweptGenerator::pair(schedules.coupling, coupling.clone(), schedules.field, Arc::new(field))?;
    check_hermitian(&g, 0.0, 4, 1e-10)?;
    Ok(g)
}

impl IsingInterferometer {
    pub fn new(config: &IsingProtocolConfig, settings: &EvolutionSettings) -> Result<Self> {
        config.validate()?;
        settings.validate()?;
        let diagonals = build_ising_diagonals(config.n, config.coupling_power, config.range())?;
        let coupling = Arc::new(CouplingTerm::new(&diagonals));
        let field = TransverseFieldTerm::new(config.n);

        let initial = coherent_x_state(config.n)?.into_amplitudes();
        let splitting = ising_generator(ising_splitting(config.b0, config.j0, config.tau)?, &coupling, field)?;
        let mut split = initial.clone();
        let p0 = flip_parity_of(&split);
        let report = evolve_in_place(&mut split, &splitting, 0.0, config.tau, settings)?;
        let split_diagnostics = Diagnostics {
            norm_drift: report.norm_drift,
            parity_drift: (flip_parity_of(&split) - p0).abs(),
            roundtrip_fidelity: None,
        };
        let recombination = ising_generator(
            ising_recombination(config.b0, config.j0, config.tau, config.tau)?,
            &coupling,
            field,
        )?;
        Ok(Self {
            config: config.clone(),
            settings: *settings,
            recombination,
            initial,
            split,
            split_diagnostics,
        })
    }

    pub fn config(&self) -> &IsingProtocolConfig {
        &self.config
    }

    pub fn settings(&self) -> &EvolutionSettings {
        &self.settings
    }

    pub fn set_tau_prime(&mut self, tau_prime: Option<f64>) -> Result<()> {
        let mut c = self.config.clone();
        c.tau_prime = tau_prime;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    pub fn initial_state(&self) -> SpinChainState {
        SpinChainState::from_evolved(self.config.n, self.initial.clone())
    }

    pub fn split_state(&self) -> SpinChainState {
        SpinChainState::from_evolved(self.config.n, self.split.clone())
    }

    pub fn splitting_diagnostics(&self) -> Diagnostics {
        self.split_diagnostics
    }

    fn check_tau_prime(&self, tp: f64) -> Result<()> {
        let tau = self.config.tau;
        if !(tp >= 0.5 * tau && tp <= tau) {
            return Err(invalid(format!(
                "tau_prime: must lie in [τ/2, τ] = [{}, {tau}], got {tp}",
                0.5 * tau
            )));
        }
        Ok(())
    }

    /// States after imprinting `phi` and recombining for each duration, in
    /// input order, plus diagnostics of the whole run.
    pub fn recombine_checkpoints(&self, phi: f64, tau_primes: &[f64]) -> Result<(Vec<Vec<Complex64>>, Diagnostics)> {
        for &tp in tau_primes {
            self.check_tau_prime(tp)?;
        }
        let mut order: Vec<usize> = (0..tau_primes.len()).collect();
        order.sort_by(|&a, &b| tau_primes[a].total_cmp(&tau_primes[b]));
        let mut psi = self.split.clone();
        imprint_in_place(self.config.n, &mut psi, phi);
        let p0 = flip_parity_of(&psi);
        let mut out = vec![Vec::new(); tau_primes.len()];
        let mut t = 0.0;
        let mut drift = self.split_diagnostics.norm_drift;
        let mut parity_drift = self.split_diagnostics.parity_drift;
        for idx in order {
            let report = evolve_in_place(&mut psi, &self.recombination, t, tau_primes[idx], &self.settings)?;
            drift = drift.max(report.norm_drift);
            parity_drift = parity_drift.max((flip_parity_of(&psi) - p0).abs());
            t = tau_primes[idx];
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

    pub fn continue_recombination(&self, state: &[Complex64], from: f64, to: f64) -> Result<Vec<Complex64>> {
        self.check_tau_prime(from)?;
        self.check_tau_prime(to)?;
        let mut psi = state.to_vec();
        evolve_in_place(&mut psi, &self.recombination, from, to, &self.settings)?;
        Ok(psi)
    }

    /// `(⟨M̂z⟩, ⟨M̂z²⟩)`; there is no readout pulse for this model.
    pub fn readout(&self, state: &[Complex64]) -> (f64, f64) {
        mz_moments_of(self.config.n, state)
    }

    pub fn run_at(&self, phi: f64, tau_prime: f64) -> Result<ProtocolOutcome> {
        let (mut states, diagnostics) = self.recombine_checkpoints(phi, &[tau_prime])?;
        let final_state = states.pop().expect("one checkpoint");
        let (mean, second_moment) = self.readout(&final_state);
        Ok(ProtocolOutcome {
            mean,
            second_moment,
            variance: second_moment - mean * mean,
            final_state: Some(final_state),
            diagnostics,
        })
    }

    pub fn roundtrip_fidelity(&self) -> Result<f64> {
        let (states, _) = self.recombine_checkpoints(0.0, &[self.config.tau])?;
        fidelity(&self.initial, &states[0])
    }
}

impl Interferometer for IsingInterferometer {
    fn n_particles(&self) -> usize {
        self.config.n
    }

    fn run(&self, phi: f64) -> Result<ProtocolOutcome> {
        let mut out = self.run_at(phi, self.config.resolved_tau_prime())?;
        out.final_state = None;
        Ok(out)
    }
}

pub fn run_ising(config: &IsingProtocolConfig, settings: &EvolutionSettings) -> Result<ProtocolOutcome> {
    IsingInterferometer::new(config, settings)?.run_at(config.phi, config.resolved_tau_prime())
}

/// Fidelity between `|+…+⟩` and the state after splitting and the full
/// inverse sweep, at `φ = 0`.
pub fn ising_roundtrip_fidelity(config: &IsingProtocolConfig, settings: &EvolutionSettings) -> Result<f64> {
    if config.phi != 0.0 {
        return Err(invalid("phi: round trip requires φ = 0"));
    }
    if config.tau_prime.is_some_and(|tp| tp != config.tau) {
        return Err(invalid("tau_prime: round trip requires τ′ = τ"));
    }
    IsingInterferometer::new(config, settings)?.roundtrip_fidelity()
}

pub fn ising_splitting_state(config: &IsingProtocolConfig, settings: &EvolutionSettings) -> Result<SpinChainState> {
    Ok(IsingInterferometer::new(config, settings)?.split_state())
}

/// Fidelity with `(|↑…↑⟩ + e^{iθ}|↓…↓⟩)/√2`, maximized over `θ`.
pub fn ghz_fidelity(state: &SpinChainState) -> f64 {
    let a = state.amplitudes();
    let s = a[0].norm() + a[a.len() - 1].norm();
    0.5 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = IsingProtocolConfig::new(5, 10.0);
        assert!(c.validate().is_ok());
        c.tau_prime = Some(4.0);
        assert!(c.validate().unwrap_err().to_string().contains("tau_prime"));
        c.tau_prime = None;
        c.j0 = 1.0;
        assert!(c.validate().unwrap_err().to_string().contains("j0"));
        c.j0 = -1.0;
        c.n = MAX_SPINS + 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_phase_and_antisymmetry() {
        let engine = IsingInterferometer::new(&IsingProtocolConfig::new(4, 4.0), &EvolutionSettings::with_dt(0.01)).unwrap();
        assert!(engine.run(0.0).unwrap().mean.abs() < 1e-12);
        for phi in [0.1, 0.3] {
            let a = engine.run(phi).unwrap().mean;
            let b = engine.run(-phi).unwrap().mean;
            assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn checkpoints_match_separate_runs() {
        let engine = IsingInterferometer::new(&IsingProtocolConfig::new(4, 4.0), &EvolutionSettings::with_dt(0.01)).unwrap();
        let tps = [3.5, 2.0, 4.0];
        let (states, _) = engine.recombine_checkpoints(0.2, &tps).unwrap();
        for (tp, s) in tps.iter().zip(&states) {
            let direct = engine.run_at(0.2, *tp).unwrap();
            assert!((engine.readout(s).0 - direct.mean).abs() < 1e-10);
        }
        assert!(engine.continue_recombination(&states[1], 2.0, 1.0).is_err());
    }

    #[test]
    fn ghz_fidelity_is_phase_insensitive() {
        let mut a = vec![Complex64::new(0.0, 0.0); 8];
        a[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        a[7] = Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, 1.1);
        let s = SpinChainState::new(3, a).unwrap();
        assert!((ghz_fidelity(&s) - 1.0).abs() < 1e-14);
        assert!((ghz_fidelity(&coherent_x_state(3).unwrap()) - 0.25).abs() < 1e-14);
    }
}
