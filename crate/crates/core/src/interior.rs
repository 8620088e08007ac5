//! Primal-dual interior-point solve of the fixed-slope problem
//!
//! ```text
//! minimize  -Σ_i p_i ln Σ_j k_ij r_j   over the probability simplex.
//! ```
//!
//! With `s_j = Σ_i p_i k_ij / Σ_l k_il r_l`, the optimality conditions are `s_j ≤ 1`
//! for all `j`, with equality wherever `r_j > 0`. These are exactly the conditions of a
//! Blahut-Arimoto fixed point. Blahut-Arimoto reaches columns whose mass vanishes only
//! sublinearly. Newton steps on the perturbed conditions `r_j (1 - s_j) = μ` reach
//! them to rounding level in a few dozen steps, independently of the starting point.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::rd::InnerRun;

/// Centering weight applied to the current complementarity gap.
const SIGMA: f64 = 0.1;
/// Fraction of the step to the boundary that is taken.
const STEP_FRACTION: f64 = 0.99;

pub(crate) struct InteriorPoint {
    /// Shifted kernel, `rows × cols`.
    k: DMatrix<f64>,
    scaled: DMatrix<f64>,
    scaled_t: DMatrix<f64>,
    hessian: DMatrix<f64>,
}

impl InteriorPoint {
    pub fn new(rows: usize, cols: usize, k_row_major: &[f64]) -> Self {
        Self {
            k: DMatrix::from_row_slice(rows, cols, k_row_major),
            scaled: DMatrix::zeros(rows, cols),
            scaled_t: DMatrix::zeros(cols, rows),
            hessian: DMatrix::zeros(cols, cols),
        }
    }

    /// Overwrites `r` with the minimizer. Stops once the duality gap `Σ r_j z_j` and the
    /// stationarity residual are both below `tol`.
    pub fn solve(&mut self, p: &[f64], r: &mut [f64], max_iter: usize, tol: f64) -> InnerRun {
        let n = self.k.ncols();
        let nf = n as f64;
        let mut rv = DVector::from_element(n, 1.0 / nf);
        let mut z = DVector::from_element(n, 0.5);
        let mut nu = 1.0;
        let ones = DVector::from_element(n, 1.0);
        let mut ratio = DVector::zeros(self.k.nrows());
        let mut residual = f64::INFINITY;
        let mut run = InnerRun {
            iterations: max_iter,
            change: residual,
            converged: false,
        };

        for it in 0..max_iter {
            let kr = &self.k * &rv;
            for (i, &pi) in p.iter().enumerate() {
                ratio[i] = if pi > 0.0 { pi / kr[i] } else { 0.0 };
            }
            let s = self.k.tr_mul(&ratio);
            let gap = rv.dot(&z);
            residual = (0..n)
                .map(|j| (nu - z[j] - s[j]).abs())
                .fold(gap, f64::max);
            if !residual.is_finite() {
                run.iterations = it;
                break;
            }
            if residual <= tol {
                run = InnerRun {
                    iterations: it,
                    change: residual,
                    converged: true,
                };
                break;
            }
            let mu = SIGMA * gap / nf;

            // Hessian Kᵀ diag(p / (K r)²) K plus the barrier term z / r.
            let weights: Vec<f64> = p.iter().zip(kr.iter()).map(|(pi, c)| pi.sqrt() / c).collect();
            for (dst, src) in self
                .scaled
                .column_iter_mut()
                .zip(self.k.column_iter())
            {
                for ((d, k), w) in dst.into_iter().zip(src.iter()).zip(&weights) {
                    *d = k * w;
                }
            }
            self.scaled.transpose_to(&mut self.scaled_t);
            // The general product dispatches to a blocked kernel; `tr_mul` does not.
            self.hessian.gemm(1.0, &self.scaled_t, &self.scaled, 0.0);
            for j in 0..n {
                self.hessian[(j, j)] += z[j] / rv[j];
            }
            let Some(chol) = factor(&self.hessian) else {
                run.iterations = it;
                break;
            };

            let rhs = DVector::from_fn(n, |j, _| s[j] - nu + mu / rv[j]);
            let y1 = chol.solve(&rhs);
            let y2 = chol.solve(&ones);
            let dnu = y1.sum() / y2.sum();
            let dr = &y1 - &y2 * dnu;
            let dz = DVector::from_fn(n, |j, _| mu / rv[j] - z[j] - z[j] / rv[j] * dr[j]);

            let mut step: f64 = 1.0;
            for j in 0..n {
                if dr[j] < 0.0 {
                    step = step.min(-STEP_FRACTION * rv[j] / dr[j]);
                }
                if dz[j] < 0.0 {
                    step = step.min(-STEP_FRACTION * z[j] / dz[j]);
                }
            }
            if step < 1e-14 {
                run.iterations = it;
                break;
            }
            rv.axpy(step, &dr, 1.0);
            z.axpy(step, &dz, 1.0);
            nu += step * dnu;
        }

        run.change = residual;
        let total = rv.sum();
        for (dst, v) in r.iter_mut().zip(rv.iter()) {
            *dst = v / total;
        }
        run
    }
}

/// Cholesky factor, with growing diagonal jitter if rounding destroyed definiteness.
fn factor(h: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(h.clone()) {
        return Some(c);
    }
    let scale = h.diagonal().max().max(f64::MIN_POSITIVE);
    let mut jitter = 1e-14 * scale;
    for _ in 0..6 {
        let mut shifted = h.clone();
        for j in 0..h.ncols() {
            shifted[(j, j)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c);
        }
        jitter *= 100.0;
    }
    None
}
