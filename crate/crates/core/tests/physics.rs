//! Direct-run oracles: entangled states after splitting, round trips,
//! integrator order and the trivial no-sweep limit.

use num_complex::Complex64;

use qpt_metrology::collective_spin::{build_bj_hamiltonian, DickeState};
use qpt_metrology::ising::mz_moments;
use qpt_metrology::propagator::{
    evolve, fidelity, ground_state, EigenMethod, EvolutionSettings, Frozen, Generator, HermitianOperator,
};
use qpt_metrology::protocol::{
    bj_roundtrip_fidelity, bj_splitting_adiabaticity, bj_splitting_state, ghz_fidelity, ising_roundtrip_fidelity,
    ising_splitting_state, BjInterferometer, BjProtocolConfig, IsingInterferometer, IsingProtocolConfig,
};

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[test]
fn slow_bj_split_is_a_cat() {
    let state = bj_splitting_state(&BjProtocolConfig::new(4, 0.0), &EvolutionSettings::default()).unwrap();
    let f = fidelity(DickeState::even_cat(4).unwrap().amplitudes(), state.amplitudes()).unwrap();
    assert!(f > 0.95, "cat fidelity {f}");
}

#[test]
fn bj_splitting_stays_in_even_ground_level() {
    let pops = bj_splitting_adiabaticity(&BjProtocolConfig::new(20, 0.0), &EvolutionSettings::default(), 30).unwrap();
    let worst = pops.iter().map(|p| p.1).fold(1.0, f64::min);
    assert!(worst > 0.98, "lowest ground-state population {worst}");
}

#[test]
fn deep_adiabatic_ising_split_is_ghz() {
    let state = ising_splitting_state(&IsingProtocolConfig::new(3, 40.0), &EvolutionSettings::default()).unwrap();
    let f = ghz_fidelity(&state);
    assert!(f > 0.99, "GHZ fidelity {f}");
}

#[test]
fn ising_split_is_macroscopic_superposition() {
    let state = ising_splitting_state(&IsingProtocolConfig::new(5, 20.0), &EvolutionSettings::default()).unwrap();
    let (mean, second) = mz_moments(&state);
    assert!(mean.abs() < 1e-8);
    assert!(second > 0.9 * 25.0 / 4.0, "⟨M̂z²⟩ = {second}");
}

#[test]
fn adiabatic_round_trips_return() {
    let s = EvolutionSettings::default();
    let bj = bj_roundtrip_fidelity(&BjProtocolConfig::new(10, 0.0), &s).unwrap();
    assert!(bj > 0.99, "BJ {bj}");
    let ising = ising_roundtrip_fidelity(&IsingProtocolConfig::new(5, 20.0), &s).unwrap();
    assert!(ising > 0.99, "Ising {ising}");
}

/// Fast but finite sweeps leave the ground level and do not come back.
/// In the strict sudden limit nothing happens at all and the round trip is
/// trivially the identity, which is checked too.
#[test]
fn diabatic_sweeps_do_not_return() {
    let s = EvolutionSettings::with_dt(1e-3);
    let rates = |r: f64| BjProtocolConfig {
        beta_1: r,
        beta_2: r,
        ..BjProtocolConfig::new(10, 0.0)
    };
    let f = bj_roundtrip_fidelity(&rates(0.5), &s).unwrap();
    assert!(f < 0.5, "diabatic BJ round trip {f}");
    let f = ising_roundtrip_fidelity(&IsingProtocolConfig::new(5, 1.0), &s).unwrap();
    assert!(f < 0.5, "diabatic Ising round trip {f}");
    let f = bj_roundtrip_fidelity(&rates(1e3), &EvolutionSettings::with_dt(1e-4)).unwrap();
    assert!(f > 0.999, "sudden BJ round trip {f}");
}

#[test]
fn round_trip_improves_as_rates_drop() {
    let s = EvolutionSettings::with_dt(2e-3);
    let ladder: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|k| {
            let config = BjProtocolConfig {
                beta_1: 4.0 * k,
                beta_2: 0.4 * k,
                ..BjProtocolConfig::new(8, 0.0)
            };
            bj_roundtrip_fidelity(&config, &s).unwrap()
        })
        .collect();
    assert!(ladder.windows(2).all(|w| w[1] >= w[0]), "{ladder:?}");
}

/// Exponential midpoint is second order: successive differences under step
/// halving shrink by four.
#[test]
fn step_halving_matches_second_order() {
    let bj = |dt: f64| {
        let config = BjProtocolConfig {
            beta_1: 2.0,
            beta_2: 0.2,
            omega_end: Some(3.0),
            ..BjProtocolConfig::new(12, 0.25)
        };
        let engine = BjInterferometer::new(&config, &EvolutionSettings::with_dt(dt)).unwrap();
        engine.run_at(0.1, 3.0).unwrap().final_state.unwrap()
    };
    let ising = |dt: f64| {
        let config = IsingProtocolConfig::new(4, 6.0);
        let engine = IsingInterferometer::new(&config, &EvolutionSettings::with_dt(dt)).unwrap();
        engine.run_at(0.2, 5.0).unwrap().final_state.unwrap()
    };
    for (name, run) in [("bj", &bj as &dyn Fn(f64) -> Vec<Complex64>), ("ising", &ising)] {
        let [a, b, c] = [0.04, 0.02, 0.01].map(run);
        let ratio = max_diff(&a, &b) / max_diff(&b, &c);
        assert!((3.6..4.4).contains(&ratio), "{name}: ratio {ratio}");
    }
}

/// `Ω_f = Ω₀` means no sweep at all: a zero-length evolution, or any
/// evolution under the frozen initial Hamiltonian, returns the prepared
/// coherent ground state.
#[test]
fn no_sweep_returns_initial_state() {
    let h = build_bj_hamiltonian(30, 11.0, -1.0).unwrap();
    let g = ground_state(&h, EigenMethod::Dense).unwrap().state;
    struct Stationary<'a>(&'a dyn HermitianOperator);
    impl Generator for Stationary<'_> {
        fn dimension(&self) -> usize {
            self.0.dimension()
        }
        fn apply(&self, _t: f64, x: &[Complex64], y: &mut [Complex64]) {
            y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            self.0.apply_add(1.0, x, y);
        }
        fn norm_bound(&self, _t: f64) -> f64 {
            self.0.norm_bound()
        }
    }
    let gen = Stationary(&h);
    let s = EvolutionSettings::default();
    let (same, _) = evolve(&g, &gen, 3.0, 3.0, &s).unwrap();
    assert_eq!(same, g);
    let (later, _) = evolve(&g, &gen, 0.0, 5.0, &s).unwrap();
    assert!(fidelity(&g, &later).unwrap() > 1.0 - 1e-10);
    let frozen = Frozen { generator: &gen, time: 0.0 };
    assert_eq!(frozen.dimension(), 31);
}
