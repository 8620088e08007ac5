//! The inverse function `R_M(E, Δ, q) = max { R(Δ, p) : D(p‖q) ≤ E }`.

use crate::amcd::{
    assemble, line_search, lumped_source, search_model, source_report, xi_root, Mode, Reduced,
};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::exponent::{check_certificate, check_distortion_threshold, source_rd_options};
use crate::prob::{DistortionMatrix, ProbabilityVector};
use crate::rd::rd_search;
use crate::report::{SolveReport, SolveStatus};
use crate::roots::Multiplier;
use crate::sources::lumping::Lumping;
use crate::tilt::Tilt;

#[derive(Debug, Clone, PartialEq)]
pub struct InverseProblem {
    pub q: ProbabilityVector,
    pub d: DistortionMatrix,
    /// Divergence radius `E` in nats.
    pub exponent: f64,
    pub delta: f64,
}

impl InverseProblem {
    pub fn new(q: ProbabilityVector, d: DistortionMatrix, exponent: f64, delta: f64) -> Result<Self> {
        let problem = Self { q, d, exponent, delta };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        check_distortion_threshold(&self.q, &self.d, self.delta)?;
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::DomainError(format!(
                "exponent threshold must be finite and >= 0, got {}",
                self.exponent
            )));
        }
        Ok(())
    }
}

/// `F_R(ξ) = (1/(1+ξ)) Σ t_i ln(a_i/q_i) / Σ t_i - ln Σ t_i - E` with
/// `t_i = exp((ln a_i + ξ ln q_i)/(1+ξ))`.
///
/// It equals `D(p‖q) - E` at the matching `p` and is non-increasing in `ξ`.
pub fn f_r(xi: f64, a: &[f64], q: &ProbabilityVector, exponent: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::DomainError(format!("xi must be >= 0, got {xi}")));
    }
    let log_a = check_certificate(a, q)?;
    let phi = 1.0 / (1.0 + xi);
    let st = Tilt::new(&log_a, q.as_slice()).stats(phi);
    Ok(phi * st.mean - st.log_z - exponent)
}

/// Solves `F_R(ξ) = 0`; `ξ = 0` when the divergence constraint is slack at `p ∝ a`.
pub fn solve_xi(a: &[f64], q: &ProbabilityVector, exponent: f64, cfg: &SolverConfig) -> Result<Multiplier> {
    let log_a = check_certificate(a, q)?;
    let mut tilt = Tilt::new(&log_a, q.as_slice());
    Ok(xi_root(&mut tilt, exponent, 0.0, cfg))
}

/// `p_i ∝ exp((ln a_i + ξ ln q_i)/(1+ξ))`.
pub fn update_p_inverse(a: &[f64], q: &ProbabilityVector, xi: f64) -> Result<ProbabilityVector> {
    if !(xi >= 0.0) {
        return Err(Error::DomainError(format!("xi must be >= 0, got {xi}")));
    }
    let log_a = check_certificate(a, q)?;
    let (p, _) = Tilt::new(&log_a, q.as_slice()).distribution(1.0 / (1.0 + xi));
    Ok(ProbabilityVector::from_normalized(p))
}

/// Computes `R_M(E, Δ, q)`; `E = 0` returns `R(Δ, q)` directly.
pub fn solve_inverse(problem: &InverseProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    problem.validate()?;
    cfg.validate()?;
    let mode = Mode::Inverse {
        radius: problem.exponent,
    };
    if problem.exponent == 0.0 {
        let q = problem.q.as_slice();
        let (rate, zeta) = rd_search(&problem.d, q, problem.delta, &source_rd_options(cfg))?;
        return source_report(
            mode,
            SolveStatus::ZeroRadius,
            &problem.d,
            q,
            &problem.q,
            zeta,
            rate,
            0.0,
            cfg,
            <[f64]>::to_vec,
        );
    }
    line_search(&problem.q, &problem.d, problem.delta, mode, cfg)
}

/// [`solve_inverse`] on class masses; see [`crate::exponent::solve_exponent_lumped`].
pub fn solve_inverse_lumped(
    problem: &InverseProblem,
    lumping: &Lumping,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    problem.validate()?;
    cfg.validate()?;
    let Some(qc) = lumped_source(lumping, &problem.q, &problem.d)? else {
        return solve_inverse(problem, cfg);
    };
    let mode = Mode::Inverse {
        radius: problem.exponent,
    };
    if problem.exponent == 0.0 {
        let (rate, zeta) = rd_search(lumping, &qc, problem.delta, &source_rd_options(cfg))?;
        return source_report(
            mode,
            SolveStatus::ZeroRadius,
            lumping,
            &qc,
            &problem.q,
            zeta,
            rate,
            0.0,
            cfg,
            |la| lumping.spread_log(la),
        );
    }
    let reduced = Reduced::new(lumping, &qc, problem.delta);
    let (outcomes, best) = search_model(&reduced, mode, cfg)?;
    Ok(assemble(mode, outcomes, best, |v, _| lumping.spread(v), |la| lumping.spread_log(la)))
}
