//! Line search over the slope with alternating `(p, a)` maximization at each slope.
//!
//! At a fixed slope `ζ` one outer iteration
//! 1. solves the scalar multiplier equation against the previous certificate `a`,
//! 2. moves `p` to the member of the tilted family selected by that multiplier,
//! 3. runs Blahut-Arimoto for `p`, warm-started from the previous output marginal,
//! 4. takes the new certificate `a_i = p_i / Σ_j e^{-ζ d_ij} r_j`.
//!
//! The exponent and the inverse differ only in steps 1 and 2 and in the objective.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::prob::{l1_distance, DistortionMatrix, ProbabilityVector};
use crate::rd::{DualCertificate, SlopeKernel, SlopeModel};
use crate::report::{IterationRecord, ProblemKind, SolveReport, SolveStatus, ZetaTrace};
use crate::roots::{increasing_root, Multiplier, RootStatus};
use crate::tilt::Tilt;

/// Which problem the engine is solving, with its threshold.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Mode {
    /// Minimize `D(p‖q)` subject to `R(Δ, p) ≥ rate`.
    Exponent { rate: f64 },
    /// Maximize `R(Δ, p)` subject to `D(p‖q) ≤ radius`.
    Inverse { radius: f64 },
}

impl Mode {
    fn kind(self) -> ProblemKind {
        match self {
            Self::Exponent { .. } => ProblemKind::Exponent,
            Self::Inverse { .. } => ProblemKind::Inverse,
        }
    }

    /// Whether `candidate` beats `incumbent` by more than the tie margin.
    fn improves(self, candidate: f64, incumbent: f64) -> bool {
        const TIE: f64 = 1e-12;
        match self {
            Self::Exponent { .. } => candidate < incumbent - TIE,
            Self::Inverse { .. } => candidate > incumbent + TIE,
        }
    }
}

/// Exponent multiplier: root of `F_E(λ) = (1-θ) E_π[s] + ln Z(θ) - target` with `θ = λ/(1+λ)`.
pub(crate) fn lambda_root(tilt: &mut Tilt, target: f64, warm: f64, cfg: &SolverConfig) -> Multiplier {
    let f0 = tilt.stats(0.0).mean - target;
    if f0 >= 0.0 {
        return Multiplier {
            value: 0.0,
            status: RootStatus::ConstraintSlack,
            iterations: 1,
            residual: f0,
        };
    }
    increasing_root(
        |lam| {
            let om = 1.0 / (1.0 + lam);
            let st = tilt.stats(lam * om);
            (om * st.mean + st.log_z - target, st.var * om * om * om)
        },
        f0,
        warm,
        cfg.lambda_cap,
        cfg.newton_tol,
        cfg.newton_max_iter,
    )
}

/// Inverse multiplier: root of `F_R(ξ) = φ E_π[s] - ln Z(φ) - radius` with `φ = 1/(1+ξ)`.
pub(crate) fn xi_root(tilt: &mut Tilt, radius: f64, warm: f64, cfg: &SolverConfig) -> Multiplier {
    let st = tilt.stats(1.0);
    let f0 = st.mean - st.log_z - radius;
    if f0 < 0.0 || f0 <= cfg.newton_tol {
        let status = if f0 < 0.0 {
            RootStatus::ConstraintSlack
        } else {
            RootStatus::Root
        };
        return Multiplier {
            value: 0.0,
            status,
            iterations: 1,
            residual: f0,
        };
    }
    let mut m = increasing_root(
        |xi| {
            let phi = 1.0 / (1.0 + xi);
            let st = tilt.stats(phi);
            (-(phi * st.mean - st.log_z - radius), st.var * phi * phi * phi)
        },
        -f0,
        warm,
        cfg.xi_cap,
        cfg.newton_tol,
        cfg.newton_max_iter,
    );
    m.residual = -m.residual;
    if m.status == RootStatus::Infeasible {
        m.status = RootStatus::NoRoot;
    }
    m
}

/// Tilt parameter selected by a multiplier.
fn theta(mode: Mode, multiplier: f64) -> f64 {
    match mode {
        Mode::Exponent { .. } => multiplier / (1.0 + multiplier),
        Mode::Inverse { .. } => 1.0 / (1.0 + multiplier),
    }
}

/// `D(p‖q)` from precomputed logarithms.
fn kl_from_logs(p: &[f64], log_p: &[f64], log_q: &[f64]) -> f64 {
    let kl: f64 = p
        .iter()
        .zip(log_p.iter().zip(log_q))
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, (lp, lq))| pi * (lp - lq))
        .sum();
    kl.max(0.0)
}

/// Result of the alternating iterations at one slope.
pub(crate) struct ZetaOutcome {
    pub trace: ZetaTrace,
    pub p: Vec<f64>,
    pub log_a: Vec<f64>,
    pub multiplier: f64,
    pub residual: f64,
}

/// A problem restricted to the support of `q`.
pub(crate) struct Reduced<'a, M> {
    pub q: &'a [f64],
    pub log_q: Vec<f64>,
    pub model: &'a M,
    pub delta: f64,
}

impl<'a, M: SlopeModel> Reduced<'a, M> {
    pub fn new(model: &'a M, q: &'a [f64], delta: f64) -> Self {
        Self {
            q,
            log_q: ln_all(q),
            model,
            delta,
        }
    }

    /// Alternating iterations at one slope. With `fixed` set, the multiplier is held at that
    /// value instead of being solved for at every outer iteration.
    pub fn run_zeta(
        &self,
        mode: Mode,
        zeta: f64,
        fixed: Option<f64>,
        cfg: &SolverConfig,
    ) -> Result<ZetaOutcome> {
        let q = self.q;
        let n = self.model.cols();
        let mut kernel = SlopeKernel::new(self.model, zeta);
        let mut log_a = self.log_q.clone();
        let mut r = vec![1.0 / n as f64; n];
        let mut p_prev = q.to_vec();
        let mut multiplier = 0.0;
        let mut records: Vec<IterationRecord> = Vec::new();
        let mut residual = f64::NAN;
        let mut last_max_col = 1.0;
        let mut last_log_ratio = 0.0;

        for iteration in 1..=cfg.max_outer_iter {
            let mut tilt = Tilt::new(&log_a, q);
            let m = match (mode, fixed) {
                (_, Some(value)) => Multiplier {
                    value,
                    status: RootStatus::Fixed,
                    iterations: 0,
                    residual: f64::NAN,
                },
                (Mode::Exponent { rate }, None) => {
                    lambda_root(&mut tilt, zeta * self.delta + rate, multiplier, cfg)
                }
                (Mode::Inverse { radius }, None) => xi_root(&mut tilt, radius, multiplier, cfg),
            };
            multiplier = m.value;
            let (p, log_p) = tilt.distribution(theta(mode, multiplier));
            let step_l1 = l1_distance(&p, &p_prev);

            let run = kernel.solve(&p, &mut r, cfg.inner_solver, cfg.max_inner_iter, cfg.ba_tol)?;
            let settled = kernel.settle(&p, &log_p, &r)?;
            let dual = -zeta * settled.expected_distortion + settled.log_ratio;
            let kl = kl_from_logs(&p, &log_p, &self.log_q);
            let (objective, constraint_residual) = match mode {
                Mode::Exponent { rate } => (-kl, -zeta * self.delta + settled.log_ratio - rate),
                Mode::Inverse { radius } => (-zeta * self.delta + settled.log_ratio, kl - radius),
            };
            // While the multiplier has no root the iterate is outside the feasible set, and
            // progress is measured on the constraint instead of the objective.
            let stalled = records.last().is_some_and(|prev| {
                let change = if m.status.is_unreachable() && prev.status.is_unreachable() {
                    constraint_residual - prev.constraint_residual
                } else {
                    objective - prev.objective
                };
                change.abs() < cfg.objective_stop_tol
            });
            records.push(IterationRecord {
                iteration,
                objective,
                step_l1,
                multiplier,
                status: m.status,
                newton_iterations: m.iterations,
                inner_iterations: run.iterations,
                inner_residual: run.change,
                dual_gap: (dual - settled.mutual_information).abs(),
                max_column_sum: settled.max_column_sum,
                support_column_deviation: settled.support_column_deviation,
                constraint_residual,
            });
            residual = constraint_residual;
            last_max_col = settled.max_column_sum;
            last_log_ratio = settled.log_ratio;
            log_a = settled.log_a;
            p_prev = p;
            if stalled {
                break;
            }
        }

        // Rescaling a by its largest column sum restores dual feasibility exactly.
        let slack = last_max_col.max(1.0).ln();
        let last_status = records.last().map(|r| r.status).unwrap_or(RootStatus::Infeasible);
        let (value, feasible) = match mode {
            Mode::Exponent { .. } => {
                let ok = !last_status.is_unreachable() && residual - slack >= -cfg.feasibility_tol;
                let kl = kl_from_logs(&p_prev, &ln_all(&p_prev), &self.log_q);
                (if ok { kl } else { f64::INFINITY }, ok)
            }
            Mode::Inverse { .. } => {
                let ok = residual <= cfg.feasibility_tol;
                let rate = -zeta * self.delta + last_log_ratio - slack;
                (if ok { rate } else { f64::NEG_INFINITY }, ok)
            }
        };
        Ok(ZetaOutcome {
            trace: ZetaTrace {
                zeta,
                value,
                feasible,
                records,
            },
            p: p_prev,
            log_a,
            multiplier,
            residual,
        })
    }

    fn run_grid(&self, mode: Mode, zetas: &[f64], cfg: &SolverConfig) -> Result<Vec<ZetaOutcome>> {
        #[cfg(feature = "parallel")]
        let it = zetas.par_iter();
        #[cfg(not(feature = "parallel"))]
        let it = zetas.iter();
        it.map(|&z| self.run_zeta(mode, z, None, cfg)).collect()
    }
}

fn ln_all(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.ln()).collect()
}

/// Index of the best feasible outcome; the earliest wins ties.
fn best_index(mode: Mode, outcomes: &[ZetaOutcome]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, o) in outcomes.iter().enumerate() {
        if !o.trace.feasible {
            continue;
        }
        match best {
            Some(b) if !mode.improves(o.trace.value, outcomes[b].trace.value) => {}
            _ => best = Some(k),
        }
    }
    best
}

/// Golden-section search for a better slope between the neighbours of the best grid point.
fn refine<M: SlopeModel>(
    reduced: &Reduced<'_, M>,
    mode: Mode,
    zetas: &[f64],
    k: usize,
    cfg: &SolverConfig,
) -> Result<Vec<ZetaOutcome>> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let lo_z = if k == 0 { 0.5 * zetas[0] } else { zetas[k - 1] };
    let hi_z = zetas.get(k + 1).copied().unwrap_or(zetas[k] + (zetas[k] - lo_z));
    let score = |o: &ZetaOutcome| match mode {
        Mode::Exponent { .. } => -o.trace.value,
        Mode::Inverse { .. } => o.trace.value,
    };
    let (mut a, mut b) = (lo_z, hi_z);
    let mut out = Vec::new();
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut o1 = reduced.run_zeta(mode, x1, None, cfg)?;
    let mut o2 = reduced.run_zeta(mode, x2, None, cfg)?;
    for _ in 0..20 {
        if score(&o1) >= score(&o2) {
            b = x2;
            x2 = x1;
            out.push(std::mem::replace(&mut o2, o1));
            x1 = b - INV_PHI * (b - a);
            o1 = reduced.run_zeta(mode, x1, None, cfg)?;
        } else {
            a = x1;
            x1 = x2;
            out.push(std::mem::replace(&mut o1, o2));
            x2 = a + INV_PHI * (b - a);
            o2 = reduced.run_zeta(mode, x2, None, cfg)?;
        }
    }
    out.push(o1);
    out.push(o2);
    Ok(out)
}

/// Grid search (plus optional refinement) on a zero-free problem; returns every
/// outcome in evaluation order and the index of the best feasible one.
pub(crate) fn search_model<M: SlopeModel>(
    reduced: &Reduced<'_, M>,
    mode: Mode,
    cfg: &SolverConfig,
) -> Result<(Vec<ZetaOutcome>, Option<usize>)> {
    let zetas = cfg.zeta_grid.points();
    let mut outcomes = reduced.run_grid(mode, &zetas, cfg)?;
    if cfg.refine_zeta {
        if let Some(k) = best_index(mode, &outcomes) {
            outcomes.extend(refine(reduced, mode, &zetas, k, cfg)?);
        }
    }
    let best = best_index(mode, &outcomes);
    Ok((outcomes, best))
}

/// Assembles the report; `lift` maps reduced vectors back to the full alphabet.
pub(crate) fn assemble(
    mode: Mode,
    outcomes: Vec<ZetaOutcome>,
    best: Option<usize>,
    lift: impl Fn(&[f64], f64) -> Vec<f64>,
    lift_log_a: impl Fn(&[f64]) -> Vec<f64>,
) -> SolveReport {
    let report = match best {
        Some(k) => {
            let o = &outcomes[k];
            SolveReport {
                kind: mode.kind(),
                status: SolveStatus::Solved,
                value: o.trace.value,
                p_star: Some(ProbabilityVector::from_normalized(lift(&o.p, 0.0))),
                certificate: Some(DualCertificate::from_log(o.trace.zeta, lift_log_a(&o.log_a))),
                multiplier: o.multiplier,
                zeta_star: o.trace.zeta,
                feasible: true,
                feasibility_residual: o.residual,
                trace: Vec::new(),
            }
        }
        None => SolveReport {
            kind: mode.kind(),
            status: SolveStatus::AllZetaInfeasible,
            value: match mode {
                Mode::Exponent { .. } => f64::INFINITY,
                Mode::Inverse { .. } => f64::NEG_INFINITY,
            },
            p_star: None,
            certificate: None,
            multiplier: f64::NAN,
            zeta_star: f64::NAN,
            feasible: false,
            feasibility_residual: f64::NAN,
            trace: Vec::new(),
        },
    };
    SolveReport {
        trace: outcomes.into_iter().map(|o| o.trace).collect(),
        ..report
    }
}

/// Driver for a plain matrix: drops `q_i = 0` symbols, searches, and maps back.
pub(crate) fn line_search(
    q: &ProbabilityVector,
    d: &DistortionMatrix,
    delta: f64,
    mode: Mode,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let support: Vec<usize> = (0..q.len()).filter(|&i| q[i] > 0.0).collect();
    let q_red: Vec<f64> = support.iter().map(|&i| q[i]).collect();
    let d_red = if support.len() == q.len() {
        d.clone()
    } else {
        d.select_rows(&support)
    };
    let reduced = Reduced::new(&d_red, &q_red, delta);
    let (outcomes, best) = search_model(&reduced, mode, cfg)?;
    let lift = |v: &[f64], fill: f64| {
        let mut full = vec![fill; q.len()];
        for (&i, x) in support.iter().zip(v) {
            full[i] = *x;
        }
        full
    };
    Ok(assemble(mode, outcomes, best, lift, |la| lift(la, f64::NEG_INFINITY)))
}

/// Report for the case where the source itself is the optimum, with the certificate of
/// the source's own rate-distortion point at slope `zeta`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn source_report<M: SlopeModel>(
    mode: Mode,
    status: SolveStatus,
    model: &M,
    q_model: &[f64],
    q: &ProbabilityVector,
    zeta: f64,
    value: f64,
    residual: f64,
    cfg: &SolverConfig,
    lift_log_a: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<SolveReport> {
    let n = model.cols();
    let mut kernel = SlopeKernel::new(model, zeta);
    let mut r = vec![1.0 / n as f64; n];
    kernel.solve(q_model, &mut r, cfg.inner_solver, cfg.max_inner_iter.max(10_000), cfg.ba_tol)?;
    let settled = kernel.settle(q_model, &ln_all(q_model), &r)?;
    Ok(SolveReport {
        kind: mode.kind(),
        status,
        value,
        p_star: Some(q.clone()),
        certificate: Some(DualCertificate::from_log(zeta, lift_log_a(&settled.log_a))),
        multiplier: 0.0,
        zeta_star: zeta,
        feasible: true,
        feasibility_residual: residual,
        trace: Vec::new(),
    })
}

/// Class masses for a lumped solve; `None` when some class carries no mass.
pub(crate) fn lumped_source(
    lumping: &crate::sources::lumping::Lumping,
    q: &ProbabilityVector,
    d: &DistortionMatrix,
) -> Result<Option<Vec<f64>>> {
    if lumping.row_classes().iter().map(Vec::len).sum::<usize>() != d.rows()
        || lumping.col_classes().iter().map(Vec::len).sum::<usize>() != d.cols()
    {
        return Err(Error::DimensionMismatch {
            expected: d.rows(),
            found: lumping.row_classes().iter().map(Vec::len).sum(),
        });
    }
    let qc = lumping.lump(q)?;
    Ok(if qc.iter().all(|v| *v > 0.0) { Some(qc) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(value: f64, feasible: bool) -> ZetaOutcome {
        ZetaOutcome {
            trace: ZetaTrace {
                zeta: 1.0,
                value,
                feasible,
                records: Vec::new(),
            },
            p: Vec::new(),
            log_a: Vec::new(),
            multiplier: 0.0,
            residual: 0.0,
        }
    }

    #[test]
    fn improvement_respects_direction_and_ties() {
        let ex = Mode::Exponent { rate: 0.5 };
        let inv = Mode::Inverse { radius: 0.1 };
        assert!(ex.improves(0.1, 0.2) && !ex.improves(0.2, 0.1));
        assert!(inv.improves(0.2, 0.1) && !inv.improves(0.1, 0.2));
        assert!(!ex.improves(0.3 - 1e-14, 0.3) && !inv.improves(0.3 + 1e-14, 0.3));
    }

    #[test]
    fn best_index_skips_infeasible_and_keeps_the_earliest_tie() {
        let ex = Mode::Exponent { rate: 0.5 };
        let outcomes = [outcome(0.05, false), outcome(0.2, true), outcome(0.1, true), outcome(0.1, true)];
        assert_eq!(best_index(ex, &outcomes), Some(2));
        let inv = Mode::Inverse { radius: 0.1 };
        assert_eq!(best_index(inv, &outcomes), Some(1));
        assert_eq!(best_index(ex, &[outcome(0.0, false)]), None);
    }

    #[test]
    fn tilt_parameters() {
        assert_eq!(theta(Mode::Exponent { rate: 1.0 }, 0.0), 0.0);
        assert_eq!(theta(Mode::Exponent { rate: 1.0 }, 3.0), 0.75);
        assert_eq!(theta(Mode::Inverse { radius: 1.0 }, 0.0), 1.0);
        assert_eq!(theta(Mode::Inverse { radius: 1.0 }, 3.0), 0.25);
    }

    #[test]
    fn divergence_from_logs() {
        let p = [0.5, 0.5, 0.0];
        let q = [0.25, 0.25, 0.5];
        let kl = kl_from_logs(&p, &ln_all(&p), &ln_all(&q));
        assert!((kl - 2f64.ln()).abs() < 1e-15);
        // Rounding below zero is clamped.
        let same = kl_from_logs(&q, &ln_all(&q), &ln_all(&q));
        assert_eq!(same, 0.0);
    }

    #[test]
    fn lambda_root_solves_its_equation() {
        let q = [0.2, 0.3, 0.5];
        let log_a = [0.4f64.ln(), 0.9f64.ln(), 0.1f64.ln()];
        let cfg = SolverConfig::default();
        let mut tilt = Tilt::new(&log_a, &q);
        let mean0 = tilt.stats(0.0).mean;
        // A target below the value at zero leaves the constraint slack.
        let slack = lambda_root(&mut tilt, mean0 - 0.1, 0.0, &cfg);
        assert_eq!((slack.value, slack.status), (0.0, RootStatus::ConstraintSlack));

        let target = mean0 + 0.3;
        let m = lambda_root(&mut tilt, target, 0.0, &cfg);
        assert_eq!(m.status, RootStatus::Root);
        let om = 1.0 / (1.0 + m.value);
        let st = tilt.stats(m.value * om);
        assert!((om * st.mean + st.log_z - target).abs() < 1e-9);
    }

    #[test]
    fn xi_root_solves_its_equation() {
        let q = [0.2, 0.3, 0.5];
        let log_a = [0.4f64.ln(), 0.9f64.ln(), 0.1f64.ln()];
        let cfg = SolverConfig::default();
        let mut tilt = Tilt::new(&log_a, &q);
        // The untilted member is q itself, so a zero radius needs no multiplier.
        let st = tilt.stats(1.0);
        let at_zero = st.mean - st.log_z;
        let m = xi_root(&mut tilt, at_zero + 1.0, 0.0, &cfg);
        assert_eq!((m.value, m.status), (0.0, RootStatus::ConstraintSlack));

        let radius = 0.5 * at_zero;
        let m = xi_root(&mut tilt, radius, 0.0, &cfg);
        assert_eq!(m.status, RootStatus::Root);
        let phi = 1.0 / (1.0 + m.value);
        let st = tilt.stats(phi);
        assert!((phi * st.mean - st.log_z - radius).abs() < 1e-9);
    }
}
