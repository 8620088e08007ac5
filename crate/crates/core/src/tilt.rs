//! The exponential family `π_θ ∝ q e^{θ s}` with `s = ln(a/q)`.
//!
//! Both the exponent and the inverse updates pick a member of this family:
//! `θ = λ/(1+λ)` for the exponent and `θ = 1/(1+ξ)` for the inverse.

use crate::prob::log_sum_exp;

/// Moments of `s` under `π_θ` together with `ln Σ_i q_i e^{θ s_i}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TiltStats {
    pub log_z: f64,
    pub mean: f64,
    pub var: f64,
}

pub(crate) struct Tilt {
    /// Indices with `q_i > 0`; the others never receive mass.
    support: Vec<usize>,
    log_q: Vec<f64>,
    s: Vec<f64>,
    len: usize,
    logits: Vec<f64>,
}

impl Tilt {
    pub fn new(log_a: &[f64], q: &[f64]) -> Self {
        let support: Vec<usize> = (0..q.len()).filter(|&i| q[i] > 0.0).collect();
        let log_q: Vec<f64> = support.iter().map(|&i| q[i].ln()).collect();
        let s = support
            .iter()
            .zip(&log_q)
            .map(|(&i, lq)| log_a[i] - lq)
            .collect();
        Self {
            logits: vec![0.0; support.len()],
            support,
            log_q,
            s,
            len: q.len(),
        }
    }

    fn fill_logits(&mut self, theta: f64) -> f64 {
        for ((l, lq), s) in self.logits.iter_mut().zip(&self.log_q).zip(&self.s) {
            *l = lq + theta * s;
        }
        log_sum_exp(&self.logits)
    }

    pub fn stats(&mut self, theta: f64) -> TiltStats {
        let log_z = self.fill_logits(theta);
        let mut mean = 0.0;
        for (l, s) in self.logits.iter().zip(&self.s) {
            mean += (l - log_z).exp() * s;
        }
        let mut var = 0.0;
        for (l, s) in self.logits.iter().zip(&self.s) {
            var += (l - log_z).exp() * (s - mean) * (s - mean);
        }
        TiltStats { log_z, mean, var }
    }

    /// `(π_θ, ln π_θ)` over the full alphabet; off-support entries are `(0, -∞)`.
    pub fn distribution(&mut self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let log_z = self.fill_logits(theta);
        let mut p = vec![0.0; self.len];
        let mut log_p = vec![f64::NEG_INFINITY; self.len];
        for (&i, l) in self.support.iter().zip(&self.logits) {
            log_p[i] = l - log_z;
            p[i] = log_p[i].exp();
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        (p, log_p)
    }
}
