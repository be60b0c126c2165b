use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

use super::PhaseScanRecord;

const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-10;
const MIN_POINTS: usize = 5;

/// Least-squares fit of `mean ≈ A sin(Nφ/c)` over `|φ| ≤ window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    /// Signed amplitude; its sign follows the signal orientation.
    pub amplitude: f64,
    pub c: f64,
    pub rms_residual: f64,
    pub window: f64,
    pub points: usize,
    pub iterations: usize,
}

impl SinusoidFit {
    /// `rms_residual / |A|`.
    pub fn relative_residual(&self) -> f64 {
        self.rms_residual / self.amplitude.abs()
    }
}

/// First sign change of `mean` on the positive side gives `φ₀ = πc/N`.
fn estimate_c(points: &[(f64, f64)], n: f64) -> f64 {
    let mut pos: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 > 0.0).collect();
    pos.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pos.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 != 0.0 && y0.signum() != y1.signum() {
            let root = x0 - y0 * (x1 - x0) / (y1 - y0);
            return n * root / PI;
        }
    }
    1.0
}

fn residuals(points: &[(f64, f64)], n: f64, a: f64, c: f64) -> f64 {
    points.iter().map(|&(x, y)| (y - a * (n * x / c).sin()).powi(2)).sum()
}

/// Deterministic Levenberg-Marquardt fit.
///
/// `c` is initialized from the first zero crossing of the records on the
/// positive side (1 when none is present) and `A` from the largest `|mean|`
/// in the window. With `window = None` the window is the half fringe
/// `π·c₀/(2N)`.
pub fn fit_sinusoid(records: &[PhaseScanRecord], n: usize, window: Option<f64>) -> Result<SinusoidFit> {
    if n == 0 {
        return Err(invalid("particle number must be positive"));
    }
    let nf = n as f64;
    let all: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.error.is_none() && r.mean.is_finite())
        .map(|r| (r.phi, r.mean))
        .collect();
    let c0 = estimate_c(&all, nf);
    let window = window.unwrap_or(PI * c0 / (2.0 * nf));
    if !(window > 0.0) {
        return Err(invalid(format!("fit window must be positive, got {window}")));
    }
    let pts: Vec<(f64, f64)> = all.into_iter().filter(|p| p.0.abs() <= window * (1.0 + 1e-12)).collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_POINTS} points within |φ| ≤ {window:.6e}, found {}",
            pts.len()
        )));
    }
    // Largest |mean| with its sign relative to sin(Nφ/c₀).
    let (xa, ya) = pts
        .iter()
        .copied()
        .max_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
        .expect("non-empty");
    let s = (nf * xa / c0).sin();
    let mut a = if s.abs() > 1e-3 { ya / s } else { ya };
    let mut c = c0;
    if a == 0.0 {
        return Err(Error::Fit("signal is identically zero in the window".into()));
    }

    let mut lambda = 1e-3;
    let mut cost = residuals(&pts, nf, a, c);
    for it in 1..=MAX_ITERATIONS {
        // Normal equations of the 2-parameter Jacobian.
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for &(x, y) in &pts {
            let arg = nf * x / c;
            let r = y - a * arg.sin();
            let ja = arg.sin();
            let jc = -a * arg.cos() * nf * x / (c * c);
            jtj[0][0] += ja * ja;
            jtj[0][1] += ja * jc;
            jtj[1][1] += jc * jc;
            jtr[0] += ja * r;
            jtr[1] += jc * r;
        }
        jtj[1][0] = jtj[0][1];
        loop {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::Fit("singular normal equations".into()));
            }
            let da = (m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            let dc = (m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let (na, nc) = (a + da, c + dc);
            let new_cost = if nc > 0.0 { residuals(&pts, nf, na, nc) } else { f64::INFINITY };
            if new_cost <= cost {
                a = na;
                c = nc;
                cost = new_cost;
                lambda = (lambda * 0.3).max(1e-12);
                if da.abs() < STEP_TOLERANCE * (1.0 + a.abs()) && dc.abs() < STEP_TOLERANCE * (1.0 + c) {
                    return Ok(SinusoidFit {
                        amplitude: a,
                        c,
                        rms_residual: (cost / pts.len() as f64).sqrt(),
                        window,
                        points: pts.len(),
                        iterations: it,
                    });
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // No downhill step exists: a stationary point.
                return Ok(SinusoidFit {
                    amplitude: a,
                    c,
                    rms_residual: (cost / pts.len() as f64).sqrt(),
                    window,
                    points: pts.len(),
                    iterations: it,
                });
            }
        }
    }
    Err(Error::Fit(format!("no convergence after {MAX_ITERATIONS} iterations")))
}

/// Least-squares line through `(log N, log Δφ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn fit_power_law(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(invalid(format!("scaling fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(bad) = points.iter().find(|p| p.0 == 0 || !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(invalid(format!("scaling fit needs N > 0 and finite Δφ > 0, got {bad:?}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("scaling fit needs at least two distinct N"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(ScalingFit {
        points: points.to_vec(),
        slope,
        intercept,
        slope_stderr: (ssr / (m - 2.0) / sxx).sqrt(),
    })
}
