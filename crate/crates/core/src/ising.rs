//! Transverse-field Ising chain with power-law couplings,
//! `H = J Σ_{i<j} σz^i σz^j / |i-j|^p - B Σ_i σx^i`, acting matrix-free on
//! the `2^N` computational basis.
//!
//! Bit `i` of a basis index is 0 for spin up (`z_i = +1`) and 1 for spin
//! down on site `i`. The chain is open (no wrap-around bonds).

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::propagator::HermitianOperator;
use crate::vector;

/// Largest supported chain (16384 amplitudes).
pub const MAX_SPINS: usize = 14;

fn check_spins(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SPINS {
        return Err(invalid(format!("spin count must be in 1..={MAX_SPINS}, got {n}")));
    }
    Ok(())
}

/// Normalized `2^N`-amplitude state of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinChainState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl SpinChainState {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_spins(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: amplitudes.len(),
            });
        }
        let deviation = (vector::norm_sqr(&amplitudes) - 1.0).abs();
        if deviation > 1e-10 {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { n, amplitudes })
    }

    pub(crate) fn from_evolved(n: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n);
        Self { n, amplitudes }
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_spins(n)?;
        if index >= 1 << n {
            return Err(invalid(format!("basis index {index} out of range for N = {n}")));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); 1 << n];
        a[index] = Complex64::new(1.0, 0.0);
        Self::new(n, a)
    }

    /// `(|↑…↑⟩ + |↓…↓⟩)/√2`.
    pub fn ghz(n: usize) -> Result<Self> {
        check_spins(n)?;
        let mut a = vec![Complex64::new(0.0, 0.0); 1 << n];
        a[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        a[(1 << n) - 1] = a[0];
        Self::new(n, a)
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        vector::norm_sqr(&self.amplitudes)
    }
}

/// Which pairs interact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingRange {
    /// All pairs `i < j`.
    #[default]
    Full,
    /// Only pairs with `|i - j| ≤ r`; `r = 1` is nearest-neighbour.
    Truncated(usize),
}

/// Diagonals of the Ising coupling (unit prefactor) and of `M̂z = ½ Σ σz`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingDiagonals {
    n: usize,
    coupling: Vec<f64>,
    mz: Vec<f64>,
}

impl IsingDiagonals {
    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.coupling.len()
    }

    /// `Σ_{i<j} z_i z_j / |i-j|^p` per basis state.
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// `½ Σ_i z_i` per basis state.
    pub fn mz(&self) -> &[f64] {
        &self.mz
    }
}

pub fn build_ising_diagonals(n: usize, power: f64, range: CouplingRange) -> Result<IsingDiagonals> {
    check_spins(n)?;
    if !power.is_finite() {
        return Err(invalid("coupling exponent must be finite"));
    }
    let max_sep = match range {
        CouplingRange::Full => n,
        CouplingRange::Truncated(0) => return Err(invalid("coupling range must be at least 1")),
        CouplingRange::Truncated(r) => r,
    };
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|(i, j)| j - i <= max_sep)
        .map(|(i, j)| (i, j, ((j - i) as f64).powf(-power)))
        .collect();
    let dim = 1usize << n;
    let mut coupling = vec![0.0; dim];
    let mut mz = vec![0.0; dim];
    for k in 0..dim {
        // z_i z_j = +1 when the bits agree.
        coupling[k] = pairs
            .iter()
            .map(|&(i, j, w)| if ((k >> i) ^ (k >> j)) & 1 == 0 { w } else { -w })
            .sum();
        mz[k] = 0.5 * (n as f64 - 2.0 * k.count_ones() as f64);
    }
    Ok(IsingDiagonals { n, coupling, mz })
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `y = J·(coupling ⊙ x) - B·Σ_i X_i x`, unnormalized.
pub fn apply_hamiltonian(x: &[Complex64], j: f64, b: f64, diagonals: &IsingDiagonals) -> Result<Vec<Complex64>> {
    check_len(diagonals.dimension(), x.len())?;
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    CouplingTerm::new(diagonals).apply_add(j, x, &mut y);
    TransverseFieldTerm::new(diagonals.n).apply_add(b, x, &mut y);
    Ok(y)
}

/// `Σ_{i<j} σz^i σz^j / |i-j|^p` as an operator.
#[derive(Debug, Clone)]
pub struct CouplingTerm {
    diagonal: Arc<Vec<f64>>,
    bound: f64,
}

impl CouplingTerm {
    pub fn new(diagonals: &IsingDiagonals) -> Self {
        Self {
            bound: diagonals.coupling.iter().map(|c| c.abs()).fold(0.0, f64::max),
            diagonal: Arc::new(diagonals.coupling.clone()),
        }
    }
}

impl HermitianOperator for CouplingTerm {
    fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_add(&self, coefficient: f64, x: &[Complex64], y: &mut [Complex64]) {
        if coefficient == 0.0 {
            return;
        }
        for ((yi, xi), c) in y.iter_mut().zip(x).zip(self.diagonal.iter()) {
            *yi += xi * (coefficient * c);
        }
    }

    fn norm_bound(&self) -> f64 {
        self.bound
    }
}

/// `-Σ_i σx^i`.
#[derive(Debug, Clone, Copy)]
pub struct TransverseFieldTerm {
    n: usize,
}

impl TransverseFieldTerm {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl HermitianOperator for TransverseFieldTerm {
    fn dimension(&self) -> usize {
        1 << self.n
    }

    fn apply_add(&self, coefficient: f64, x: &[Complex64], y: &mut [Complex64]) {
        if coefficient == 0.0 {
            return;
        }
        for (k, yk) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..self.n {
                acc += x[k ^ (1 << i)];
            }
            *yk -= acc * coefficient;
        }
    }

    fn norm_bound(&self) -> f64 {
        self.n as f64
    }
}

/// `M̂z = ½ Σ σz` as an operator.
#[derive(Debug, Clone)]
pub struct MzTerm {
    diagonal: Arc<Vec<f64>>,
}

impl MzTerm {
    pub fn new(diagonals: &IsingDiagonals) -> Self {
        Self {
            diagonal: Arc::new(diagonals.mz.clone()),
        }
    }
}

impl HermitianOperator for MzTerm {
    fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_add(&self, coefficient: f64, x: &[Complex64], y: &mut [Complex64]) {
        for ((yi, xi), m) in y.iter_mut().zip(x).zip(self.diagonal.iter()) {
            *yi += xi * (coefficient * m);
        }
    }

    fn norm_bound(&self) -> f64 {
        self.diagonal.iter().map(|m| m.abs()).fold(0.0, f64::max)
    }
}

/// `[(|↑⟩ + |↓⟩)/√2]^{⊗N}`, the ground state of `-BΣσx` for `B > 0`.
pub fn coherent_x_state(n: usize) -> Result<SpinChainState> {
    check_spins(n)?;
    let dim = 1usize << n;
    let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    SpinChainState::new(n, vec![a; dim])
}

/// `e^{-iφM̂z}|ψ⟩`.
pub fn apply_phase_mz(state: &SpinChainState, phi: f64) -> SpinChainState {
    let mut out = state.clone();
    imprint_in_place(state.n, &mut out.amplitudes, phi);
    out
}

pub(crate) fn imprint_in_place(n: usize, amplitudes: &mut [Complex64], phi: f64) {
    for (k, a) in amplitudes.iter_mut().enumerate() {
        let mz = 0.5 * (n as f64 - 2.0 * k.count_ones() as f64);
        *a *= Complex64::from_polar(1.0, -phi * mz);
    }
}

/// `(⟨M̂z⟩, ⟨M̂z²⟩)`.
pub fn mz_moments(state: &SpinChainState) -> (f64, f64) {
    mz_moments_of(state.n, &state.amplitudes)
}

pub(crate) fn mz_moments_of(n: usize, amplitudes: &[Complex64]) -> (f64, f64) {
    amplitudes.iter().enumerate().fold((0.0, 0.0), |(s1, s2), (k, a)| {
        let mz = 0.5 * (n as f64 - 2.0 * k.count_ones() as f64);
        let p = a.norm_sqr();
        (s1 + mz * p, s2 + mz * mz * p)
    })
}

/// `⟨X̄⟩` with `X̄ = Π_i σx^i`, which maps index `k` to its complement.
pub fn global_flip_parity_expectation(state: &SpinChainState) -> f64 {
    flip_parity_of(&state.amplitudes)
}

pub(crate) fn flip_parity_of(a: &[Complex64]) -> f64 {
    let mask = a.len() - 1;
    a.iter()
        .enumerate()
        .map(|(k, x)| (x.conj() * a[k ^ mask]).re)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn z_of(k: usize, site: usize) -> f64 {
        if (k >> site) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Dense `H` from explicit Kronecker products; site 0 is the least
    /// significant tensor factor.
    fn dense_hamiltonian(n: usize, j: f64, b: f64, power: f64) -> DMatrix<Complex64> {
        let id = DMatrix::<Complex64>::identity(2, 2);
        let sz = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let site_op = |op: &DMatrix<Complex64>, site: usize| {
            let mut m = DMatrix::<Complex64>::identity(1, 1);
            for s in (0..n).rev() {
                m = m.kronecker(if s == site { op } else { &id });
            }
            m
        };
        let dim = 1 << n;
        let mut h = DMatrix::from_element(dim, dim, c(0.0));
        for i in 0..n {
            for k in i + 1..n {
                let w = j / ((k - i) as f64).powf(power);
                h += (site_op(&sz, i) * site_op(&sz, k)) * c(w);
            }
            h -= site_op(&sx, i) * c(b);
        }
        h
    }

    #[test]
    fn two_spin_coupling_diagonal() {
        let d = build_ising_diagonals(2, 3.0, CouplingRange::Full).unwrap();
        assert_eq!(d.coupling(), &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(d.mz(), &[1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn three_spin_all_up_entry() {
        let d = build_ising_diagonals(3, 3.0, CouplingRange::Full).unwrap();
        assert!((d.coupling()[0] - 2.125).abs() < 1e-15);
    }

    #[test]
    fn five_spin_diagonal_matches_nested_loops() {
        let n = 5;
        let d = build_ising_diagonals(n, 3.0, CouplingRange::Full).unwrap();
        for k in 0..1usize << n {
            let mut expected = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i < j {
                        expected += z_of(k, i) * z_of(k, j) / ((j - i) as f64).powi(3);
                    }
                }
            }
            assert!((d.coupling()[k] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_flip_symmetries() {
        let n = 6;
        let d = build_ising_diagonals(n, 3.0, CouplingRange::Full).unwrap();
        let mask = (1 << n) - 1;
        for k in 0..1usize << n {
            assert_eq!(d.coupling()[k], d.coupling()[k ^ mask]);
            assert_eq!(d.mz()[k], -d.mz()[k ^ mask]);
        }
    }

    #[test]
    fn truncated_range_is_nearest_neighbour() {
        let d = build_ising_diagonals(4, 3.0, CouplingRange::Truncated(1)).unwrap();
        assert_eq!(d.coupling()[0], 3.0);
        assert!(build_ising_diagonals(4, 3.0, CouplingRange::Truncated(0)).is_err());
    }

    #[test]
    fn spin_cap_enforced() {
        assert!(build_ising_diagonals(MAX_SPINS + 1, 3.0, CouplingRange::Full).is_err());
        assert!(build_ising_diagonals(0, 3.0, CouplingRange::Full).is_err());
    }

    #[test]
    fn zero_hamiltonian_and_field_eigenstate() {
        let d = build_ising_diagonals(4, 3.0, CouplingRange::Full).unwrap();
        let x = vector::probe_vector(16, 2);
        assert!(apply_hamiltonian(&x, 0.0, 0.0, &d).unwrap().iter().all(|z| z.norm() == 0.0));
        let plus = coherent_x_state(4).unwrap();
        let y = apply_hamiltonian(plus.amplitudes(), 0.0, 1.0, &d).unwrap();
        for (a, b) in y.iter().zip(plus.amplitudes()) {
            assert!((a + b * 4.0).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_free_matches_dense_kronecker_oracle() {
        for n in 1..=6 {
            let d = build_ising_diagonals(n, 3.0, CouplingRange::Full).unwrap();
            let h = dense_hamiltonian(n, -1.0, 1.0, 3.0);
            let x = vector::probe_vector(1 << n, n as u64);
            let y = apply_hamiltonian(&x, -1.0, 1.0, &d).unwrap();
            let expected = &h * nalgebra::DVector::from_column_slice(&x);
            for (a, b) in y.iter().zip(expected.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_action_on_probe_pairs() {
        for n in [3usize, 7, 10] {
            let d = build_ising_diagonals(n, 3.0, CouplingRange::Full).unwrap();
            for s in 0..100u64 {
                let u = vector::probe_vector(1 << n, 2 * s);
                let v = vector::probe_vector(1 << n, 2 * s + 1);
                let hu = apply_hamiltonian(&u, -0.7, 1.3, &d).unwrap();
                let hv = apply_hamiltonian(&v, -0.7, 1.3, &d).unwrap();
                let lhs = vector::inner(&u, &hv);
                let rhs = vector::inner(&v, &hu).conj();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_state_values() {
        let s1 = coherent_x_state(1).unwrap();
        for a in s1.amplitudes() {
            assert!((a.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let s3 = coherent_x_state(3).unwrap();
        for a in s3.amplitudes() {
            assert!((a.re - 8f64.sqrt().recip()).abs() < 1e-15);
        }
        let d = build_ising_diagonals(3, 3.0, CouplingRange::Full).unwrap();
        let y = apply_hamiltonian(s3.amplitudes(), 0.0, 1.0, &d).unwrap();
        for (a, b) in y.iter().zip(s3.amplitudes()) {
            assert!((a + b * 3.0).norm() < 1e-14);
        }
    }

    #[test]
    fn phase_mz_identities() {
        let psi = SpinChainState::new(4, vector::probe_vector(16, 9)).unwrap();
        assert_eq!(apply_phase_mz(&psi, 0.0), psi);
        let back = apply_phase_mz(&apply_phase_mz(&psi, 0.83), -0.83);
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        // Half-integer M̂z spectrum for odd N: period 4π.
        let one = SpinChainState::new(1, vector::probe_vector(2, 1)).unwrap();
        let turned = apply_phase_mz(&one, 4.0 * std::f64::consts::PI);
        for (a, b) in turned.amplitudes().iter().zip(one.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn moments_of_reference_states() {
        let up = SpinChainState::basis(4, 0).unwrap();
        assert_eq!(mz_moments(&up), (2.0, 4.0));
        let (m1, m2) = mz_moments(&coherent_x_state(2).unwrap());
        assert!(m1.abs() < 1e-15 && (m2 - 0.5).abs() < 1e-15);
        let (m1, m2) = mz_moments(&SpinChainState::ghz(5).unwrap());
        assert!(m1.abs() < 1e-15 && (m2 - 6.25).abs() < 1e-14);
    }

    #[test]
    fn flip_parity_of_reference_states() {
        for n in 1..=6 {
            assert!((global_flip_parity_expectation(&coherent_x_state(n).unwrap()) - 1.0).abs() < 1e-14);
            assert!((global_flip_parity_expectation(&SpinChainState::ghz(n).unwrap()) - 1.0).abs() < 1e-14);
        }
        let up = SpinChainState::basis(3, 0).unwrap();
        assert_eq!(global_flip_parity_expectation(&up), 0.0);
    }
}
