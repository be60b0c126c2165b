//! Symmetric two-mode sector of N bosons in the Dicke basis `|J, m⟩`,
//! `J = N/2`, with amplitudes stored for `m = -J, -J+1, ..., +J`
//! (index `k` holds `m = k - J`).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::propagator::{apply_real_band, HermitianOperator};
use crate::vector;

/// Normalization tolerance enforced by [`DickeState::new`].
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Rotation axis of a collective spin operator or pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(invalid(format!("unknown axis '{other}' (expected x, y or z)"))),
        }
    }
}

/// `m` eigenvalue of basis index `k` for `n` particles.
#[inline]
pub fn m_value(n: usize, k: usize) -> f64 {
    k as f64 - 0.5 * n as f64
}

/// Normalized state of `n` particles in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl DickeState {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("particle number must be at least 1"));
        }
        if amplitudes.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                actual: amplitudes.len(),
            });
        }
        let deviation = (vector::norm_sqr(&amplitudes) - 1.0).abs();
        if deviation > NORM_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { n, amplitudes })
    }

    /// Wraps amplitudes produced by a norm-checked evolution.
    pub(crate) fn from_evolved(n: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), n + 1);
        Self { n, amplitudes }
    }

    /// `|J, m⟩` with `m = k - J`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(invalid(format!("basis index {k} out of range for N = {n}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self::new(n, amplitudes)
    }

    /// Even spin cat `(|J, J⟩ + |J, -J⟩)/√2`, the GHZ state of the sector.
    pub fn even_cat(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("particle number must be at least 1"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[0] = a;
        amplitudes[n] = a;
        Self::new(n, amplitudes)
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.n + 1
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

    /// `(⟨Ĵz⟩, ⟨Ĵz²⟩)` from the diagonal weights.
    pub fn jz_moments(&self) -> (f64, f64) {
        self.amplitudes
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(s1, s2), (k, a)| {
                let m = m_value(self.n, k);
                let p = a.norm_sqr();
                (s1 + m * p, s2 + m * m * p)
            })
    }
}

/// Hermitian operator on the Dicke sector with bandwidth at most one:
/// a real diagonal plus a complex superdiagonal (the subdiagonal is its
/// conjugate), so hermiticity holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveOperator {
    diagonal: Vec<f64>,
    upper: Vec<Complex64>,
    /// Real parts of `upper` when it has no imaginary part.
    real_upper: Option<Vec<f64>>,
}

impl CollectiveOperator {
    pub fn new(diagonal: Vec<f64>, upper: Vec<Complex64>) -> Result<Self> {
        if diagonal.len() < 2 {
            return Err(invalid("collective operators need dimension >= 2"));
        }
        if upper.len() + 1 != diagonal.len() {
            return Err(Error::DimensionMismatch {
                expected: diagonal.len() - 1,
                actual: upper.len(),
            });
        }
        Ok(Self::from_parts(diagonal, upper))
    }

    fn from_parts(diagonal: Vec<f64>, upper: Vec<Complex64>) -> Self {
        let real_upper = upper
            .iter()
            .all(|u| u.im == 0.0)
            .then(|| upper.iter().map(|u| u.re).collect());
        Self {
            diagonal,
            upper,
            real_upper,
        }
    }

    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    pub fn n_particles(&self) -> usize {
        self.diagonal.len() - 1
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn upper(&self) -> &[Complex64] {
        &self.upper
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(
            self.diagonal.iter().map(|d| d * factor).collect(),
            self.upper.iter().map(|u| u * factor).collect(),
        )
    }

    /// `self + other`.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if other.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: other.dimension(),
            });
        }
        Ok(Self::from_parts(
            self.diagonal.iter().zip(&other.diagonal).map(|(a, b)| a + b).collect(),
            self.upper.iter().zip(&other.upper).map(|(a, b)| a + b).collect(),
        ))
    }

    /// `y = O x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: x.len(),
            });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_add(1.0, x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dimension();
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for k in 0..d {
            m[(k, k)] = Complex64::new(self.diagonal[k], 0.0);
        }
        for (k, u) in self.upper.iter().enumerate() {
            m[(k, k + 1)] = *u;
            m[(k + 1, k)] = u.conj();
        }
        m
    }

}

impl HermitianOperator for CollectiveOperator {
    fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_add(&self, coefficient: f64, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.diagonal.len();
        debug_assert_eq!(x.len(), d);
        debug_assert_eq!(y.len(), d);
        if coefficient == 0.0 {
            return;
        }
        if let Some(upper) = &self.real_upper {
            apply_real_band([(coefficient, &self.diagonal, upper), (0.0, &self.diagonal, upper)], x, y);
        } else {
            for k in 0..d {
                let mut acc = x[k] * self.diagonal[k];
                if k + 1 < d {
                    acc += self.upper[k] * x[k + 1];
                }
                if k > 0 {
                    acc += self.upper[k - 1].conj() * x[k - 1];
                }
                y[k] += acc * coefficient;
            }
        }
    }

    fn real_band(&self) -> Option<(&[f64], &[f64])> {
        self.real_upper.as_deref().map(|u| (self.diagonal.as_slice(), u))
    }

    fn norm_bound(&self) -> f64 {
        let d = self.diagonal.len();
        (0..d)
            .map(|k| {
                let mut row = self.diagonal[k].abs();
                if k + 1 < d {
                    row += self.upper[k].norm();
                }
                if k > 0 {
                    row += self.upper[k - 1].norm();
                }
                row
            })
            .fold(0.0, f64::max)
    }
}

/// Matrix elements `½√(J(J+1) - m(m+1))` linking `m` and `m+1`.
fn ladder_elements(n: usize) -> Vec<f64> {
    let j = 0.5 * n as f64;
    (0..n)
        .map(|k| {
            let m = m_value(n, k);
            0.5 * (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
        })
        .collect()
}

/// Exact `Ĵx`, `Ĵy` or `Ĵz` for `n` particles.
pub fn build_angular_momentum(n: usize, axis: Axis) -> Result<CollectiveOperator> {
    if n == 0 {
        return Err(invalid("particle number must be at least 1"));
    }
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Axis::Z => CollectiveOperator::new((0..=n).map(|k| m_value(n, k)).collect(), vec![zero; n]),
        Axis::X => CollectiveOperator::new(
            vec![0.0; n + 1],
            ladder_elements(n).into_iter().map(|l| Complex64::new(l, 0.0)).collect(),
        ),
        // Ĵy = (Ĵ+ - Ĵ-)/2i, so the (m, m+1) element is +i·l.
        Axis::Y => CollectiveOperator::new(
            vec![0.0; n + 1],
            ladder_elements(n).into_iter().map(|l| Complex64::new(0.0, l)).collect(),
        ),
    }
}

/// `Ĵz²`, diagonal.
pub fn build_jz_squared(n: usize) -> Result<CollectiveOperator> {
    if n == 0 {
        return Err(invalid("particle number must be at least 1"));
    }
    CollectiveOperator::new(
        (0..=n).map(|k| m_value(n, k).powi(2)).collect(),
        vec![Complex64::new(0.0, 0.0); n],
    )
}

/// Bose-Josephson Hamiltonian `-Ω Ĵx + (χ/N) Ĵz²`.
pub fn build_bj_hamiltonian(n: usize, omega: f64, chi: f64) -> Result<CollectiveOperator> {
    let jx = build_angular_momentum(n, Axis::X)?;
    let jz2 = build_jz_squared(n)?;
    jx.scaled(-omega).plus(&jz2.scaled(chi / n as f64))
}

/// `e^{-iφĴz}|ψ⟩`: amplitude `k` picks up `e^{-iφm}`.
pub fn apply_phase_imprint(state: &DickeState, phi: f64) -> DickeState {
    let mut out = state.clone();
    imprint_in_place(state.n, &mut out.amplitudes, phi);
    out
}

pub(crate) fn imprint_in_place(n: usize, amplitudes: &mut [Complex64], phi: f64) {
    for (k, a) in amplitudes.iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, -phi * m_value(n, k));
    }
}

/// Eigendecomposition of `Ĵx`; eigenvalues snapped to the exact ladder.
struct JxSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn jx_spectrum(n: usize) -> Arc<JxSpectrum> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<JxSpectrum>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("pulse cache poisoned").get(&n) {
        return Arc::clone(s);
    }
    let d = n + 1;
    let ladder = ladder_elements(n);
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (k, l) in ladder.iter().enumerate() {
        m[(k, k + 1)] = *l;
        m[(k + 1, k)] = *l;
    }
    let eig = m.symmetric_eigen();
    let values = eig
        .eigenvalues
        .iter()
        .map(|&v| {
            let snapped = (2.0 * v).round() / 2.0;
            if (snapped - v).abs() < 1e-6 {
                snapped
            } else {
                v
            }
        })
        .collect();
    let spectrum = Arc::new(JxSpectrum {
        values,
        vectors: eig.eigenvectors,
    });
    cache
        .lock()
        .expect("pulse cache poisoned")
        .entry(n)
        .or_insert_with(|| Arc::clone(&spectrum));
    spectrum
}

fn rotate_x_in_place(n: usize, amplitudes: &mut [Complex64], angle: f64) {
    let spec = jx_spectrum(n);
    let d = n + 1;
    // c = Vᵀ ψ, scaled by e^{-iθλ}, then ψ = V c.
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d];
    for (j, c) in coeffs.iter_mut().enumerate() {
        let col = spec.vectors.column(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..d {
            acc += amplitudes[k] * col[k];
        }
        *c = acc * Complex64::from_polar(1.0, -angle * spec.values[j]);
    }
    for (k, a) in amplitudes.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in coeffs.iter().enumerate() {
            acc += c * spec.vectors[(k, j)];
        }
        *a = acc;
    }
}

/// `e^{-i·angle·Ĵ_axis}|ψ⟩` by exact spectral decomposition.
///
/// The `Ĵx` eigenbasis is computed once per particle number and cached;
/// `y` rotations reuse it through `Ĵy = e^{-iπĴz/2} Ĵx e^{iπĴz/2}`.
pub fn apply_rotation_pulse(state: &DickeState, axis: Axis, angle: f64) -> DickeState {
    let n = state.n;
    let mut out = state.clone();
    match axis {
        Axis::Z => imprint_in_place(n, &mut out.amplitudes, angle),
        Axis::X => rotate_x_in_place(n, &mut out.amplitudes, angle),
        Axis::Y => {
            let quarter = std::f64::consts::FRAC_PI_2;
            imprint_in_place(n, &mut out.amplitudes, -quarter);
            rotate_x_in_place(n, &mut out.amplitudes, angle);
            imprint_in_place(n, &mut out.amplitudes, quarter);
        }
    }
    out
}

fn check_dims(state: &DickeState, op: &CollectiveOperator) -> Result<()> {
    if op.dimension() != state.dimension() {
        return Err(Error::DimensionMismatch {
            expected: state.dimension(),
            actual: op.dimension(),
        });
    }
    Ok(())
}

/// `⟨ψ|Ô|ψ⟩`.
pub fn expectation(state: &DickeState, op: &CollectiveOperator) -> Result<f64> {
    check_dims(state, op)?;
    let y = op.apply(&state.amplitudes)?;
    let value = vector::inner(&state.amplitudes, &y);
    debug_assert!(
        value.im.abs() <= 1e-10 * value.re.abs().max(1.0),
        "expectation has imaginary residue {}",
        value.im
    );
    Ok(value.re)
}

/// `⟨ψ|Ô²|ψ⟩ = ‖Ô ψ‖²` for Hermitian `Ô`.
pub fn second_moment(state: &DickeState, op: &CollectiveOperator) -> Result<f64> {
    check_dims(state, op)?;
    let y = op.apply(&state.amplitudes)?;
    Ok(vector::norm_sqr(&y))
}

/// `Π̂|J, m⟩ = |J, -m⟩`, which equals `e^{iπ(J - Ĵx)}` and so has eigenvalue
/// `(-1)^{J - m_x}` on the `Ĵx` eigenbasis.
pub fn apply_parity(state: &DickeState) -> DickeState {
    let mut out = state.clone();
    out.amplitudes.reverse();
    out
}

/// `⟨Π̂⟩` for the π-rotation-about-x symmetry of the Bose-Josephson model.
pub fn parity_expectation(state: &DickeState) -> f64 {
    parity_of_amplitudes(&state.amplitudes)
}

pub(crate) fn parity_of_amplitudes(a: &[Complex64]) -> f64 {
    let d = a.len();
    (0..d).map(|k| (a[k].conj() * a[d - 1 - k]).re).sum()
}
