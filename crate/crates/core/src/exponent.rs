//! Marton's error exponent `E_M(R, Δ, q) = min { D(p‖q) : R(Δ, p) ≥ R }`.

use crate::amcd::{
    assemble, lambda_root, line_search, lumped_source, search_model, source_report, Mode, Reduced,
};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::prob::{delta_max, DistortionMatrix, ProbabilityVector};
use crate::rd::{rd_search, RdOptions};
use crate::report::{SolveReport, SolveStatus};
use crate::roots::Multiplier;
use crate::sources::lumping::Lumping;
use crate::tilt::Tilt;

/// Source, distortion and thresholds of an exponent computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentProblem {
    pub q: ProbabilityVector,
    pub d: DistortionMatrix,
    /// Rate threshold `R` in nats.
    pub rate: f64,
    /// Distortion threshold `Δ`.
    pub delta: f64,
}

impl ExponentProblem {
    pub fn new(q: ProbabilityVector, d: DistortionMatrix, rate: f64, delta: f64) -> Result<Self> {
        let problem = Self { q, d, rate, delta };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        check_distortion_threshold(&self.q, &self.d, self.delta)?;
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::DomainError(format!(
                "rate threshold must be finite and > 0, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_distortion_threshold(
    q: &ProbabilityVector,
    d: &DistortionMatrix,
    delta: f64,
) -> Result<()> {
    let dmax = delta_max(q, d)?;
    if !(delta >= 0.0 && delta <= dmax) {
        return Err(Error::DomainError(format!(
            "distortion threshold {delta} outside [0, {dmax}]"
        )));
    }
    Ok(())
}

pub(crate) fn check_certificate(a: &[f64], q: &ProbabilityVector) -> Result<Vec<f64>> {
    if a.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: a.len(),
        });
    }
    a.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(Error::DomainError(format!("certificate entry a[{i}] = {v} is not positive")))
            }
        })
        .collect()
}

fn check_multiplier(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} must be >= 0, got {v}")))
    }
}

/// `F_E(λ)`, whose smallest nonnegative root is the optimal multiplier for fixed `a`.
///
/// With `t_i = exp((λ ln a_i + ln q_i)/(λ+1))`,
/// `F_E(λ) = (1/(λ+1)) Σ t_i ln(a_i/q_i) / Σ t_i + ln Σ t_i - ζΔ - R`.
/// It equals `Σ_i p_i ln(a_i/p_i) - ζΔ - R` at the matching `p`, and is non-decreasing in `λ`.
pub fn f_e(
    lambda: f64,
    a: &[f64],
    q: &ProbabilityVector,
    zeta: f64,
    delta: f64,
    rate: f64,
) -> Result<f64> {
    check_multiplier("lambda", lambda)?;
    let log_a = check_certificate(a, q)?;
    let om = 1.0 / (1.0 + lambda);
    let st = Tilt::new(&log_a, q.as_slice()).stats(lambda * om);
    Ok(om * st.mean + st.log_z - zeta * delta - rate)
}

/// Safeguarded Newton solve of `F_E(λ) = 0`, warm-started at zero.
pub fn solve_lambda(
    a: &[f64],
    q: &ProbabilityVector,
    zeta: f64,
    delta: f64,
    rate: f64,
    cfg: &SolverConfig,
) -> Result<Multiplier> {
    let log_a = check_certificate(a, q)?;
    let mut tilt = Tilt::new(&log_a, q.as_slice());
    Ok(lambda_root(&mut tilt, zeta * delta + rate, 0.0, cfg))
}

/// `p_i ∝ exp((λ ln a_i + ln q_i)/(λ+1))`.
pub fn update_p_exponent(a: &[f64], q: &ProbabilityVector, lambda: f64) -> Result<ProbabilityVector> {
    check_multiplier("lambda", lambda)?;
    let log_a = check_certificate(a, q)?;
    let (p, _) = Tilt::new(&log_a, q.as_slice()).distribution(lambda / (1.0 + lambda));
    Ok(ProbabilityVector::from_normalized(p))
}

/// Computes `E_M(R, Δ, q)`.
///
/// If the source already meets the rate (`R ≤ R(Δ, q)`, up to `feasibility_tol`) the
/// exponent is exactly zero with `p* = q`. Otherwise the alternating scheme runs at every grid slope and the
/// smallest feasible divergence is reported.
pub fn solve_exponent(problem: &ExponentProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    problem.validate()?;
    cfg.validate()?;
    let q = problem.q.as_slice();
    let (source_rate, source_zeta) = rd_search(&problem.d, q, problem.delta, &source_rd_options(cfg))?;
    if problem.rate <= source_rate + cfg.feasibility_tol {
        return source_report(
            Mode::Exponent { rate: problem.rate },
            SolveStatus::SourceFeasible,
            &problem.d,
            q,
            &problem.q,
            source_zeta,
            0.0,
            source_rate - problem.rate,
            cfg,
            <[f64]>::to_vec,
        );
    }
    line_search(
        &problem.q,
        &problem.d,
        problem.delta,
        Mode::Exponent { rate: problem.rate },
        cfg,
    )
}

/// [`solve_exponent`] on class masses of a partition under which `d` and `q` are invariant.
///
/// The iterates are those of the full solver started from `q`, computed at the cost of
/// the number of classes. `lumping` must have been built from `problem.d`.
pub fn solve_exponent_lumped(
    problem: &ExponentProblem,
    lumping: &Lumping,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    problem.validate()?;
    cfg.validate()?;
    let Some(qc) = lumped_source(lumping, &problem.q, &problem.d)? else {
        return solve_exponent(problem, cfg);
    };
    let mode = Mode::Exponent { rate: problem.rate };
    let (source_rate, source_zeta) = rd_search(lumping, &qc, problem.delta, &source_rd_options(cfg))?;
    if problem.rate <= source_rate + cfg.feasibility_tol {
        return source_report(
            mode,
            SolveStatus::SourceFeasible,
            lumping,
            &qc,
            &problem.q,
            source_zeta,
            0.0,
            source_rate - problem.rate,
            cfg,
            |la| lumping.spread_log(la),
        );
    }
    let reduced = Reduced::new(lumping, &qc, problem.delta);
    let (outcomes, best) = search_model(&reduced, mode, cfg)?;
    Ok(assemble(mode, outcomes, best, |v, _| lumping.spread(v), |la| lumping.spread_log(la)))
}

pub(crate) fn source_rd_options(cfg: &SolverConfig) -> RdOptions {
    RdOptions {
        ba_tol: cfg.ba_tol.min(1e-12),
        inner_solver: cfg.inner_solver,
        ..RdOptions::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::RootStatus;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn f_e_at_zero_is_source_log_ratio() {
        let q = pv(&[0.2, 0.3, 0.5]);
        let a = [0.3, 0.1, 0.7];
        let direct: f64 = (0..3).map(|i| q[i] * (a[i] / q[i]).ln()).sum::<f64>() - 2.0 * 0.1 - 0.4;
        assert!((f_e(0.0, &a, &q, 2.0, 0.1, 0.4).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn f_e_with_a_equal_q_is_constant() {
        let q = pv(&[0.2, 0.3, 0.5]);
        for lam in [0.0, 0.7, 5.0, 1e6] {
            let v = f_e(lam, q.as_slice(), &q, 1.5, 0.2, 0.3).unwrap();
            assert!((v - (-1.5 * 0.2 - 0.3)).abs() < 1e-14);
        }
    }

    #[test]
    fn f_e_matches_printed_formula() {
        let q = pv(&[0.1, 0.6, 0.3]);
        let a: [f64; 3] = [0.5, 0.2, 0.9];
        let lam: f64 = 1.7;
        let t: Vec<f64> = (0..3)
            .map(|i| ((lam * a[i].ln() + q[i].ln()) / (lam + 1.0)).exp())
            .collect();
        let st: f64 = t.iter().sum();
        let num: f64 = (0..3).map(|i| t[i] * (a[i] / q[i]).ln()).sum();
        let expected = num / st / (lam + 1.0) + st.ln() - 0.8 * 0.3 - 0.1;
        assert!((f_e(lam, &a, &q, 0.8, 0.3, 0.1).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn update_examples() {
        let q = pv(&[0.5, 0.5]);
        let p = update_p_exponent(&[1.0, 2.0], &q, 1e8).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-7 && (p[1] - 2.0 / 3.0).abs() < 1e-7);
        let q3 = pv(&[0.2, 0.3, 0.5]);
        // a proportional to q cancels under normalization.
        let p = update_p_exponent(&[0.8, 1.2, 2.0], &q3, 3.0).unwrap();
        assert!(p.l1_distance(&q3) < 1e-14);
        // A constant a flattens q to q^{1/(λ+1)}.
        let p = update_p_exponent(&[0.4, 0.4, 0.4], &q3, 3.0).unwrap();
        let flat: Vec<f64> = q3.as_slice().iter().map(|v| v.powf(0.25)).collect();
        let total: f64 = flat.iter().sum();
        for i in 0..3 {
            assert!((p[i] - flat[i] / total).abs() < 1e-15);
        }
        let p = update_p_exponent(&[0.1, 5.0, 0.4], &q3, 0.0).unwrap();
        assert!(p.l1_distance(&q3) < 1e-14);
    }

    #[test]
    fn slack_when_constraint_holds_at_zero() {
        let q = pv(&[0.5, 0.5]);
        let m = solve_lambda(&[0.9, 0.9], &q, 1.0, 0.1, 0.1, &SolverConfig::default()).unwrap();
        assert_eq!(m.status, RootStatus::ConstraintSlack);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let q = pv(&[0.5, 0.5]);
        assert!(f_e(-1.0, &[0.5, 0.5], &q, 1.0, 0.1, 0.1).is_err());
        assert!(f_e(1.0, &[0.5, 0.0], &q, 1.0, 0.1, 0.1).is_err());
        assert!(update_p_exponent(&[0.5], &q, 1.0).is_err());
        let d = DistortionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(ExponentProblem::new(q.clone(), d.clone(), 0.0, 0.1).is_err());
        assert!(ExponentProblem::new(q.clone(), d.clone(), 0.1, 0.6).is_err());
        assert!(ExponentProblem::new(q, d, 0.1, 0.5).is_ok());
    }
}
