//! Solver output: the optimum, its certificate and the per-slope iteration trace.

use serde::Serialize;

use crate::prob::ProbabilityVector;
use crate::rd::DualCertificate;
use crate::roots::RootStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Exponent,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The line search produced the value.
    Solved,
    /// The rate threshold is already met by the source, so the exponent is zero.
    SourceFeasible,
    /// The divergence radius is zero, so the value is the source's own rate.
    ZeroRadius,
    /// No slope admits a feasible point; the value is `+∞`.
    AllZetaInfeasible,
}

/// One outer iteration at a fixed slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `-D(p‖q)` for the exponent, `-ζΔ + Σ p ln(a/p)` for the inverse.
    pub objective: f64,
    /// `‖p^{(n)} - p^{(n-1)}‖₁`.
    pub step_l1: f64,
    pub multiplier: f64,
    pub status: RootStatus,
    pub newton_iterations: usize,
    pub inner_iterations: usize,
    /// Final stopping quantity of the inner solver: the last max-entry change of `r` for
    /// Blahut-Arimoto, the larger of duality gap and stationarity residual otherwise.
    pub inner_residual: f64,
    /// `|(-ζ E[d] + Σ p ln(a/p)) - I(X;Y)|` at the inner fixed point.
    pub dual_gap: f64,
    /// `max_j Σ_i a_i e^{-ζ d_ij}` for the new certificate.
    pub max_column_sum: f64,
    /// `max |Σ_i a_i e^{-ζ d_ij} - 1|` over the support of `r`.
    pub support_column_deviation: f64,
    /// Exponent: `-ζΔ + Σ p ln(a/p) - R`. Inverse: `D(p‖q) - E`.
    pub constraint_residual: f64,
}

/// All outer iterations at one slope and the value they settle on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaTrace {
    pub zeta: f64,
    /// `D(p‖q)` for the exponent (`+∞` if infeasible), the rate bound for the inverse.
    pub value: f64,
    pub feasible: bool,
    pub records: Vec<IterationRecord>,
}

impl ZetaTrace {
    fn checked_pairs(&self) -> impl Iterator<Item = (&IterationRecord, &IterationRecord)> {
        self.records
            .windows(2)
            .map(|w| (&w[0], &w[1]))
            .filter(|(prev, next)| prev.status.is_feasible() && next.status.is_feasible())
    }

    /// Iterations whose objective gain falls short of `½‖Δp‖₁² - slack`.
    ///
    /// Pairs involving an iterate produced outside the feasible set are skipped.
    pub fn descent_violations(&self, slack: f64) -> Vec<usize> {
        self.checked_pairs()
            .filter(|(prev, next)| {
                next.objective - prev.objective < 0.5 * next.step_l1 * next.step_l1 - slack
            })
            .map(|(_, next)| next.iteration)
            .collect()
    }

    /// Iterations where the objective drops by more than `slack`.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<usize> {
        self.checked_pairs()
            .filter(|(prev, next)| next.objective < prev.objective - slack)
            .map(|(_, next)| next.iteration)
            .collect()
    }

    /// Largest dual gap and column sum over the recorded inner fixed points.
    pub fn worst_inner_residuals(&self) -> (f64, f64) {
        self.records.iter().fold((0.0, f64::NEG_INFINITY), |(g, c), r| {
            (g.max(r.dual_gap), c.max(r.max_column_sum))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub kind: ProblemKind,
    pub status: SolveStatus,
    /// Exponent or rate in nats; `+∞` when every slope is infeasible.
    pub value: f64,
    pub p_star: Option<ProbabilityVector>,
    pub certificate: Option<DualCertificate>,
    /// `λ*` for the exponent, `ξ*` for the inverse.
    pub multiplier: f64,
    pub zeta_star: f64,
    /// Whether the reported optimum satisfies its constraint within the feasibility tolerance.
    pub feasible: bool,
    /// Exponent: `-ζΔ + Σ p ln(a/p) - R`. Inverse: `D(p*‖q) - E`.
    pub feasibility_residual: f64,
    pub trace: Vec<ZetaTrace>,
}

impl SolveReport {
    pub fn descent_violations(&self, slack: f64) -> usize {
        self.trace.iter().map(|t| t.descent_violations(slack).len()).sum()
    }

    pub fn monotonicity_violations(&self, slack: f64) -> usize {
        self.trace.iter().map(|t| t.monotonicity_violations(slack).len()).sum()
    }

    pub fn outer_iterations(&self) -> usize {
        self.trace.iter().map(|t| t.records.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iteration: usize, objective: f64, step_l1: f64, status: RootStatus) -> IterationRecord {
        IterationRecord {
            iteration,
            objective,
            step_l1,
            multiplier: 0.0,
            status,
            newton_iterations: 0,
            inner_iterations: 0,
            inner_residual: 0.0,
            dual_gap: 0.0,
            max_column_sum: 1.0,
            support_column_deviation: 0.0,
            constraint_residual: 0.0,
        }
    }

    #[test]
    fn violations_skip_infeasible_iterates() {
        let trace = ZetaTrace {
            zeta: 1.0,
            value: 0.1,
            feasible: true,
            records: vec![
                record(1, 0.0, 0.0, RootStatus::Infeasible),
                record(2, -0.3, 0.5, RootStatus::Root),
                record(3, -0.2, 0.1, RootStatus::Root),
                record(4, -0.25, 0.1, RootStatus::Root),
            ],
        };
        assert_eq!(trace.monotonicity_violations(1e-9), vec![4]);
        assert_eq!(trace.descent_violations(1e-8), vec![4]);
    }

    #[test]
    fn descent_requires_pinsker_margin() {
        let trace = ZetaTrace {
            zeta: 1.0,
            value: 0.0,
            feasible: true,
            records: vec![record(1, 0.0, 0.0, RootStatus::Root), record(2, 0.001, 0.1, RootStatus::Root)],
        };
        assert_eq!(trace.descent_violations(1e-8), vec![2]);
        assert!(trace.monotonicity_violations(1e-9).is_empty());
    }
}
