//! Safeguarded Newton iteration for monotone scalar functions on `[0, cap]`.

use serde::{Deserialize, Serialize};

/// How a multiplier was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStatus {
    /// A root was located to the requested tolerance.
    Root,
    /// The constraint already holds at multiplier 0.
    ConstraintSlack,
    /// The exponent constraint cannot be met for this slope, even at the cap.
    Infeasible,
    /// The inverse constraint cannot be met below the cap; the multiplier is clamped.
    NoRoot,
    /// The iteration budget ran out inside a valid bracket.
    MaxIter,
    /// The multiplier was supplied by the caller instead of solved for.
    Fixed,
}

impl RootStatus {
    /// True when the iterate produced under this status belongs to the feasible set.
    pub fn is_feasible(self) -> bool {
        matches!(self, Self::Root | Self::ConstraintSlack | Self::MaxIter)
    }

    /// True when no multiplier up to the cap satisfies the constraint.
    pub fn is_unreachable(self) -> bool {
        matches!(self, Self::Infeasible | Self::NoRoot)
    }
}

/// Multiplier returned by the exponent and inverse root solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Multiplier {
    pub value: f64,
    pub status: RootStatus,
    /// Function evaluations spent, including bracket growth.
    pub iterations: usize,
    /// Function value at `value`.
    pub residual: f64,
}

/// Finds the root of a non-decreasing `g` with `g(0) = g0 < 0`.
///
/// `eval` returns `(g(x), g'(x))`. The bracket starts at `[0, 1]` (or at the warm start)
/// and grows by a factor of four until it changes sign or reaches `cap`. Newton steps
/// that leave the bracket are replaced by bisection, geometric when the bracket spans
/// orders of magnitude. Returns [`RootStatus::Infeasible`] with `value = cap` when
/// `g(cap) < 0`.
pub(crate) fn increasing_root(
    mut eval: impl FnMut(f64) -> (f64, f64),
    g0: f64,
    warm: f64,
    cap: f64,
    tol: f64,
    max_iter: usize,
) -> Multiplier {
    let mut evals = 0;
    let mut call = |x: f64, evals: &mut usize| {
        *evals += 1;
        eval(x)
    };
    let done = |value, status, iterations, residual| Multiplier {
        value,
        status,
        iterations,
        residual,
    };
    let (mut lo, mut hi) = (0.0, f64::NAN);
    let mut g_lo = g0;
    let mut x = warm.clamp(0.0, cap);
    if x > 0.0 {
        let (g, _) = call(x, &mut evals);
        if g.abs() <= tol {
            return done(x, RootStatus::Root, evals, g);
        }
        if g < 0.0 {
            lo = x;
            g_lo = g;
        } else {
            hi = x;
        }
    }
    if hi.is_nan() {
        let mut h = f64::max(1.0, 2.0 * lo).min(cap);
        loop {
            let (g, _) = call(h, &mut evals);
            if g.abs() <= tol {
                return done(h, RootStatus::Root, evals, g);
            }
            if g > 0.0 {
                hi = h;
                break;
            }
            lo = h;
            g_lo = g;
            if h >= cap {
                return done(cap, RootStatus::Infeasible, evals, g);
            }
            h = (4.0 * h).min(cap);
        }
    }
    if !(x > lo && x < hi) {
        x = split(lo, hi);
    }
    let mut g_x = g_lo;
    for _ in 0..max_iter {
        let (g, dg) = call(x, &mut evals);
        g_x = g;
        if g.abs() <= tol {
            return done(x, RootStatus::Root, evals, g);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return done(x, RootStatus::Root, evals, g);
        }
        let newton = x - g / dg;
        x = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            split(lo, hi)
        };
    }
    done(x, RootStatus::MaxIter, evals, g_x)
}

fn split(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 16.0 * lo {
        (lo * hi).sqrt()
    } else {
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_root_of_linear_function() {
        let m = increasing_root(|x| (x - 3.5, 1.0), -3.5, 0.0, 1e8, 1e-13, 100);
        assert_eq!(m.status, RootStatus::Root);
        assert!((m.value - 3.5).abs() < 1e-12);
    }

    #[test]
    fn reports_unbracketed_root() {
        let m = increasing_root(|x| (-1.0 / (1.0 + x), 1.0 / (1.0 + x).powi(2)), -1.0, 0.0, 1e8, 1e-12, 100);
        assert_eq!(m.status, RootStatus::Infeasible);
        assert_eq!(m.value, 1e8);
    }

    #[test]
    fn survives_misleading_derivative() {
        // Flat tails make raw Newton overshoot; the bracket keeps it in range.
        let f = |x: f64| ((x - 50.0).tanh(), 1.0 / (x - 50.0).cosh().powi(2));
        let m = increasing_root(f, (-50f64).tanh(), 0.0, 1e8, 1e-14, 200);
        assert_eq!(m.status, RootStatus::Root);
        assert!((m.value - 50.0).abs() < 1e-10);
    }

    #[test]
    fn warm_start_on_either_side() {
        for warm in [0.5, 2.0, 1e3] {
            let m = increasing_root(|x| (x.ln() - 1.0, 1.0 / x), -1e300, warm, 1e8, 1e-14, 200);
            assert!((m.value - 1f64.exp()).abs() < 1e-12, "warm {warm}");
        }
    }

    #[test]
    fn large_roots_use_geometric_splits() {
        let m = increasing_root(|x| ((x / 1e6).ln(), 1.0 / x), -1e300, 0.0, 1e8, 1e-13, 200);
        assert_eq!(m.status, RootStatus::Root);
        assert!((m.value / 1e6 - 1.0).abs() < 1e-12);
    }
}
