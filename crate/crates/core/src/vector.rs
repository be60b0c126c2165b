//! Small dense helpers on complex amplitude slices.

use num_complex::Complex64;

/// `⟨a|b⟩`, antilinear in the first argument.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn normalize(a: &mut [Complex64]) -> f64 {
    let n = norm_sqr(a).sqrt();
    if n > 0.0 {
        let inv = 1.0 / n;
        a.iter_mut().for_each(|x| *x *= inv);
    }
    n
}

/// Rotate the global phase so the largest-magnitude amplitude is real and
/// positive. Near-ties (within 1e-9 relative) resolve to the lowest index.
pub fn fix_global_phase(a: &mut [Complex64]) {
    let max = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = a
        .iter()
        .position(|x| x.norm() >= max * (1.0 - 1e-9))
        .expect("max is attained");
    let phase = a[pivot].conj() / a[pivot].norm();
    a.iter_mut().for_each(|x| *x *= phase);
}

/// Deterministic pseudo-random unit vector built from a Weyl sequence.
/// Used where a generic starting or probe vector is needed without an RNG.
pub fn probe_vector(dim: usize, salt: u64) -> Vec<Complex64> {
    const G1: f64 = 0.618_033_988_749_894_9;
    const G2: f64 = 0.754_877_666_246_692_8;
    let offset = (salt as f64 + 1.0) * 0.137_174_211_248_285_3;
    let mut v: Vec<Complex64> = (0..dim)
        .map(|i| {
            let k = i as f64 + 1.0;
            Complex64::new(
                ((k * G1 + offset).fract() - 0.5) + 0.05,
                (k * G2 + 2.0 * offset).fract() - 0.5,
            )
        })
        .collect();
    normalize(&mut v);
    v
}
