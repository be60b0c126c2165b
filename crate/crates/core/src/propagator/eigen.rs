use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::vector;

use super::HermitianOperator;

/// Largest dimension diagonalized densely under [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense below [`DENSE_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Lowest eigenpair with the gap to the next level.
#[derive(Debug, Clone)]
pub struct GroundState {
    /// Normalized; the largest-magnitude amplitude is real and positive.
    pub state: Vec<Complex64>,
    pub energy: f64,
    /// `E₁ - E₀ ≥ 0`.
    pub gap: f64,
}

pub fn ground_state<H: HermitianOperator + ?Sized>(op: &H, method: EigenMethod) -> Result<GroundState> {
    let d = op.dimension();
    if d < 2 {
        return Err(invalid("ground_state needs dimension >= 2"));
    }
    let mut gs = match method {
        EigenMethod::Dense => dense_ground_state(op),
        EigenMethod::Lanczos => lanczos_ground_state(op, &LanczosOptions::default())?,
        EigenMethod::Auto if d <= DENSE_LIMIT => dense_ground_state(op),
        EigenMethod::Auto => lanczos_ground_state(op, &LanczosOptions::default())?,
    };
    vector::fix_global_phase(&mut gs.state);
    Ok(gs)
}

/// Materializes `op` column by column.
pub fn dense_matrix<H: HermitianOperator + ?Sized>(op: &H) -> DMatrix<Complex64> {
    let d = op.dimension();
    let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    let mut e = vec![Complex64::new(0.0, 0.0); d];
    let mut col = vec![Complex64::new(0.0, 0.0); d];
    for j in 0..d {
        e[j] = Complex64::new(1.0, 0.0);
        col.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        op.apply_add(1.0, &e, &mut col);
        for (i, c) in col.iter().enumerate() {
            m[(i, j)] = *c;
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    m
}

fn lowest_two(values: &DVector<f64>) -> (usize, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let gap = values[order[1]] - values[order[0]];
    (order[0], gap.max(0.0))
}

fn dense_ground_state<H: HermitianOperator + ?Sized>(op: &H) -> GroundState {
    let m = dense_matrix(op);
    if m.iter().all(|z| z.im == 0.0) {
        let eig = m.map(|z| z.re).symmetric_eigen();
        let (idx, gap) = lowest_two(&eig.eigenvalues);
        GroundState {
            state: eig.eigenvectors.column(idx).iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            energy: eig.eigenvalues[idx],
            gap,
        }
    } else {
        let eig = m.symmetric_eigen();
        let (idx, gap) = lowest_two(&eig.eigenvalues);
        GroundState {
            state: eig.eigenvectors.column(idx).iter().copied().collect(),
            energy: eig.eigenvalues[idx],
            gap,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dimension: usize,
    pub max_restarts: usize,
    /// Residual tolerance `‖Hy - θy‖` relative to `max(1, ‖H‖)`.
    pub tolerance: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dimension: 120,
            max_restarts: 60,
            tolerance: 1e-10,
        }
    }
}

/// Restarted Lanczos with full reorthogonalization for the two lowest
/// eigenpairs. Each cycle restarts from the sum of the two lowest Ritz
/// vectors. An exactly degenerate ground level is resolved only to one
/// vector, so the reported gap is then to the next distinct level.
pub fn lanczos_ground_state<H: HermitianOperator + ?Sized>(
    op: &H,
    opts: &LanczosOptions,
) -> Result<GroundState> {
    let d = op.dimension();
    let m = opts.krylov_dimension.min(d).max(2);
    let scale = op.norm_bound().max(1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut start = vector::probe_vector(d, 11);
    let mut last_residual = f64::INFINITY;

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        vector::normalize(&mut start);
        basis.push(start.clone());
        let mut w = vec![zero; d];
        for j in 0..m {
            w.iter_mut().for_each(|x| *x = zero);
            op.apply_add(1.0, &basis[j], &mut w);
            let a = vector::inner(&basis[j], &w).re;
            alpha.push(a);
            // Two passes of Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let c = vector::inner(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let b = vector::norm_sqr(&w).sqrt();
            if j + 1 == m || b < 1e-13 * scale {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }

        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let ritz = |idx: usize| -> Vec<Complex64> {
            let mut y = vec![zero; d];
            for (coef, q) in eig.eigenvectors.column(idx).iter().zip(&basis) {
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi += qi * *coef;
                }
            }
            vector::normalize(&mut y);
            y
        };
        let residual = |y: &[Complex64], theta: f64| -> f64 {
            let mut hy = vec![zero; d];
            op.apply_add(1.0, y, &mut hy);
            hy.iter()
                .zip(y)
                .map(|(h, v)| (h - v * theta).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };

        let y0 = ritz(order[0]);
        let e0 = eig.eigenvalues[order[0]];
        let r0 = residual(&y0, e0);
        let exhausted = k == d || k < m;
        if k < 2 {
            // Invariant one-dimensional subspace: the start was an eigenvector.
            // Perturb and try again to expose the next level.
            start = y0.iter().zip(vector::probe_vector(d, 13)).map(|(a, b)| a + b * 1e-3).collect();
            last_residual = r0;
            continue;
        }
        let y1 = ritz(order[1]);
        let e1 = eig.eigenvalues[order[1]];
        let r1 = residual(&y1, e1);
        last_residual = r0.max(r1);
        if last_residual <= opts.tolerance * scale || (exhausted && r0 <= opts.tolerance * scale) {
            return Ok(GroundState {
                state: y0,
                energy: e0,
                gap: (e1 - e0).max(0.0),
            });
        }
        start = y0.iter().zip(&y1).map(|(a, b)| a + b).collect();
    }
    Err(Error::EigenNoConvergence {
        iterations: opts.max_restarts * m,
        residual: last_residual,
    })
}
