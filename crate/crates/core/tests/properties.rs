//! Randomized invariants of operators, pulses, sweeps and readouts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qpt_metrology::analysis::{phase_uncertainty, FnInterferometer};
use qpt_metrology::collective_spin::{
    apply_parity, apply_phase_imprint, apply_rotation_pulse, build_angular_momentum, parity_expectation, Axis,
    DickeState,
};
use qpt_metrology::ising::{apply_hamiltonian, build_ising_diagonals, CouplingRange};
use qpt_metrology::propagator::EvolutionSettings;
use qpt_metrology::protocol::{
    BjInterferometer, BjProtocolConfig, Interferometer, IsingInterferometer, IsingProtocolConfig, ProtocolOutcome,
};
use qpt_metrology::vector::{inner, probe_vector};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_state(n: usize, seed: u64) -> DickeState {
    let mut v = probe_vector(n + 1, seed);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    DickeState::new(n, v).unwrap()
}

fn axis() -> impl Strategy<Value = Axis> {
    prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)]
}

/// Fast sweeps so that each case stays cheap.
fn quick_bj(n: usize, omega_f: f64) -> BjProtocolConfig {
    BjProtocolConfig {
        beta_1: 2.0,
        beta_2: 0.5,
        omega_end: Some(4.0),
        ..BjProtocolConfig::new(n, omega_f)
    }
}

fn coarse() -> EvolutionSettings {
    EvolutionSettings::with_dt(1e-2)
}

fn dense_ising(n: usize, j: f64, b: f64, power: f64, range: Option<usize>) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    // Site 0 is the least significant bit, the rightmost factor.
    let site = |op: &DMatrix<Complex64>, i: usize| {
        (0..n).rev().fold(DMatrix::<Complex64>::identity(1, 1), |acc, s| {
            acc.kronecker(if s == i { op } else { &id })
        })
    };
    let dim = 1 << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        for k in i + 1..n {
            if range.is_some_and(|r| k - i > r) {
                continue;
            }
            let w = ((k - i) as f64).powf(-power);
            h += site(&sz, i) * site(&sz, k) * c(j * w);
        }
        h -= site(&sx, i) * c(b);
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn su2_algebra_and_casimir(n in 1usize..=40) {
        let [x, y, z] = [Axis::X, Axis::Y, Axis::Z].map(|a| build_angular_momentum(n, a).unwrap().to_dense());
        let i = Complex64::i();
        prop_assert!(max_abs(&(&x * &y - &y * &x - &z * i)) < 1e-10);
        prop_assert!(max_abs(&(&y * &z - &z * &y - &x * i)) < 1e-10);
        prop_assert!(max_abs(&(&z * &x - &x * &z - &y * i)) < 1e-10);
        let j = n as f64 / 2.0;
        let casimir = &x * &x + &y * &y + &z * &z;
        let expected = DMatrix::<Complex64>::identity(n + 1, n + 1) * c(j * (j + 1.0));
        prop_assert!(max_abs(&(casimir - expected)) < 1e-10);
    }

    #[test]
    fn pulses_are_unitary_and_additive(n in 1usize..=60, ax in axis(), a in -4.0f64..4.0, b in -4.0f64..4.0, seed in 0u64..10_000) {
        let s = random_state(n, seed);
        let once = apply_rotation_pulse(&s, ax, a + b);
        let twice = apply_rotation_pulse(&apply_rotation_pulse(&s, ax, a), ax, b);
        prop_assert!((once.norm_sqr() - 1.0).abs() < 1e-10);
        let diff = once.amplitudes().iter().zip(twice.amplitudes()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn parity_reverses_the_imprint(n in 1usize..=60, phi in -3.0f64..3.0, seed in 0u64..10_000) {
        let s = random_state(n, seed);
        let lhs = apply_parity(&apply_phase_imprint(&s, phi));
        let rhs = apply_phase_imprint(&apply_parity(&s), -phi);
        let diff = lhs.amplitudes().iter().zip(rhs.amplitudes()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
        prop_assert!((apply_phase_imprint(&s, phi).jz_moments().0 - s.jz_moments().0).abs() < 1e-10);
    }

    #[test]
    fn matrix_free_ising_equals_dense(n in 1usize..=6, j in -2.0f64..2.0, b in -2.0f64..2.0, power in 0.0f64..4.0, r in 0usize..4, seed in 0u64..10_000) {
        let range = (r > 0).then_some(r);
        let diag = build_ising_diagonals(n, power, range.map_or(CouplingRange::Full, CouplingRange::Truncated)).unwrap();
        let x = probe_vector(1 << n, seed);
        let y = apply_hamiltonian(&x, j, b, &diag).unwrap();
        let dense = dense_ising(n, j, b, power, range) * nalgebra::DVector::from_vec(x);
        let err = y.iter().zip(dense.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bj_drifts_and_antisymmetry(n in 2usize..=16, omega_f in 0.0f64..0.9, phi in -0.5f64..0.5) {
        let engine = BjInterferometer::new(&quick_bj(n, omega_f), &coarse()).unwrap();
        let plus = engine.run(phi).unwrap();
        let minus = engine.run(-phi).unwrap();
        prop_assert!(plus.diagnostics.norm_drift < 1e-8);
        prop_assert!(plus.diagnostics.parity_drift < 1e-6);
        prop_assert!((plus.mean + minus.mean).abs() < 1e-8, "{} {}", plus.mean, minus.mean);
        let h = n as f64 / 2.0;
        prop_assert!(plus.variance >= -1e-12);
        prop_assert!(plus.second_moment <= h * h + 1e-10);
    }

    #[test]
    fn ising_drifts_and_antisymmetry(n in 2usize..=6, tau in 2.0f64..12.0, frac in 0.5f64..=1.0, phi in -0.5f64..0.5) {
        let config = IsingProtocolConfig { tau_prime: Some(frac * tau), ..IsingProtocolConfig::new(n, tau) };
        let engine = IsingInterferometer::new(&config, &coarse()).unwrap();
        let plus = engine.run(phi).unwrap();
        let minus = engine.run(-phi).unwrap();
        prop_assert!(plus.diagnostics.norm_drift < 1e-8);
        prop_assert!(plus.diagnostics.parity_drift < 1e-6);
        prop_assert!((plus.mean + minus.mean).abs() < 1e-8);
        let h = n as f64 / 2.0;
        prop_assert!(plus.variance >= -1e-12 && plus.second_moment <= h * h + 1e-10);
    }

    #[test]
    fn split_state_stays_even(n in 2usize..=24, omega_f in 0.0f64..0.9) {
        let engine = BjInterferometer::new(&quick_bj(n, omega_f), &coarse()).unwrap();
        let split = engine.split_state();
        prop_assert!((parity_expectation(&split) - 1.0).abs() < 1e-6);
        prop_assert!((split.norm_sqr() - 1.0).abs() < 1e-8);
    }
}

/// `√(1 - 0)/N`: the cat readout `|J,J⟩⟨J,-J| + h.c.` oscillates as
/// `cos(Nφ)` and squares to the projector onto the cat sector.
#[test]
fn cat_state_closure_is_heisenberg() {
    for n in [2usize, 7, 20, 64] {
        let cat = DickeState::even_cat(n).unwrap();
        let runner = FnInterferometer::new(n, move |phi| {
            let a = apply_phase_imprint(&cat, phi);
            let amps = a.amplitudes();
            let mean = 2.0 * (amps[n].conj() * amps[0]).re;
            let second = amps[0].norm_sqr() + amps[n].norm_sqr();
            Ok(ProtocolOutcome::from_moments(mean, second))
        });
        let phi0 = std::f64::consts::FRAC_PI_2 / n as f64;
        let d = phase_uncertainty(&runner, phi0, 1e-6 / n as f64).unwrap();
        assert!((d * n as f64 - 1.0).abs() < 1e-6, "N = {n}: Δφ·N = {}", d * n as f64);
    }
}

/// Coherent spin state along `x`, imprint, then read out `Ĵy` through an
/// `x` pulse: `Δφ = 1/√N` at `φ = 0`.
#[test]
fn coherent_state_closure_is_standard_limit() {
    for n in [2usize, 9, 30, 100] {
        let up = DickeState::basis(n, n).unwrap();
        let css = apply_rotation_pulse(&up, Axis::Y, std::f64::consts::FRAC_PI_2);
        let runner = FnInterferometer::new(n, move |phi| {
            let out = apply_rotation_pulse(&apply_phase_imprint(&css, phi), Axis::X, std::f64::consts::FRAC_PI_2);
            let (mean, second) = out.jz_moments();
            Ok(ProtocolOutcome::from_moments(mean, second))
        });
        let d = phase_uncertainty(&runner, 0.0, 1e-6).unwrap();
        assert!((d * (n as f64).sqrt() - 1.0).abs() < 1e-6, "N = {n}: {}", d * (n as f64).sqrt());
    }
}

#[test]
fn probe_vectors_are_deterministic() {
    let a = probe_vector(32, 7);
    assert_eq!(a, probe_vector(32, 7));
    assert!(inner(&a, &probe_vector(32, 8)).norm() < inner(&a, &a).norm());
}
