//! Reference computations the iterative solvers are checked and timed against.
//!
//! The oracles enumerate the probability simplex of a small alphabet and evaluate
//! `R(Δ, p)` at every grid point, zooming in around the best point. They share nothing
//! with the alternating solvers beyond the rate-distortion evaluation itself.

use std::time::Instant;

use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::amcd::{Mode, Reduced};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::exponent::ExponentProblem;
use crate::inverse::{solve_inverse, InverseProblem};
use crate::prob::{DistortionMatrix, ProbabilityVector};
use crate::rd::{rd_search, RdOptions};

/// Largest alphabet the oracles accept.
pub const ORACLE_MAX_ALPHABET: usize = 4;
/// Margin by which an oracle point must satisfy its constraint.
pub const ORACLE_MARGIN: f64 = 1e-9;
/// Slack on `D(p‖q) ≤ E` for a grid-baseline pair to count.
pub const GRID_KL_TOL: f64 = 1e-6;

/// Simplex grid for the brute-force oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexGridSpec {
    /// Points are the compositions of `resolution` into `M` parts, divided by `resolution`.
    pub resolution: usize,
    /// Points with a coordinate in `(0, min_mass)` are skipped.
    pub min_mass: f64,
    /// Zoom rounds; each shrinks the step by [`ZOOM_FACTOR`] around the incumbent.
    pub refinements: usize,
}

/// Step reduction per zoom round; the zoom window spans two old steps each way.
pub const ZOOM_FACTOR: usize = 4;

impl Default for SimplexGridSpec {
    fn default() -> Self {
        Self {
            resolution: 60,
            min_mass: 0.0,
            refinements: 8,
        }
    }
}

impl SimplexGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid resolution must be >= 2, got {}",
                self.resolution
            )));
        }
        if !(self.min_mass >= 0.0 && self.min_mass < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "min_mass must lie in [0, 1), got {}",
                self.min_mass
            )));
        }
        Ok(())
    }
}

/// All integer vectors of length `m` with entries in `[lo, hi]` summing to `total`.
fn integer_points(m: usize, lo: i64, hi: i64, total: i64) -> Vec<Vec<i64>> {
    fn rec(m: usize, lo: i64, hi: i64, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if m == 1 {
            if (lo..=hi).contains(&left) {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for v in lo..=hi {
            // The remaining m - 1 entries must be able to absorb what is left.
            let rest = left - v;
            if rest < lo * (m as i64 - 1) || rest > hi * (m as i64 - 1) {
                continue;
            }
            cur.push(v);
            rec(m - 1, lo, hi, rest, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, lo, hi, total, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Maximizes `score` over the zoomed simplex grid; `None` from `score` marks infeasibility.
///
/// `R(Δ, p)` is not concave in `p`, so the zoom follows the [`ORACLE_BEAM`] best points
/// rather than one incumbent. Ties go to the earliest point.
fn zoom_search(
    m: usize,
    grid: &SimplexGridSpec,
    extra: &[f64],
    score: impl Fn(&[f64]) -> Result<Option<f64>> + Sync,
) -> Result<Option<(f64, Vec<f64>)>> {
    let admissible = |p: &[f64]| p.iter().all(|&v| v >= 0.0 && (v == 0.0 || v >= grid.min_mass));
    let res = grid.resolution as i64;
    let mut points: Vec<Vec<f64>> = integer_points(m, 0, res, res)
        .into_iter()
        .map(|v| v.iter().map(|&k| k as f64 / res as f64).collect())
        .collect();
    points.push(extra.to_vec());
    let mut step = 1.0 / res as f64;
    let mut beam = top_of(&points, &admissible, &score, step)?;
    let half_width = 2 * ZOOM_FACTOR as i64;
    let offsets = integer_points(m, -half_width, half_width, 0);
    for _ in 0..grid.refinements {
        if beam.is_empty() {
            break;
        }
        step /= ZOOM_FACTOR as f64;
        let mut local: Vec<Vec<f64>> = beam.iter().map(|(_, c)| c.clone()).collect();
        for (_, center) in &beam {
            local.extend(offsets.iter().filter(|v| v.iter().any(|&k| k != 0)).map(|v| {
                center
                    .iter()
                    .zip(v)
                    .map(|(c, &k)| {
                        let x = c + step * k as f64;
                        if x.abs() < 1e-15 {
                            0.0
                        } else {
                            x
                        }
                    })
                    .collect()
            }));
        }
        beam = top_of(&local, &admissible, &score, step)?;
    }
    Ok(beam.into_iter().next())
}

/// Number of incumbents followed by the zoom.
pub const ORACLE_BEAM: usize = 8;

/// The [`ORACLE_BEAM`] best scored points, best first, pairwise more than two steps apart.
fn top_of(
    points: &[Vec<f64>],
    admissible: &(impl Fn(&[f64]) -> bool + Sync),
    score: &(impl Fn(&[f64]) -> Result<Option<f64>> + Sync),
    step: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let eval = |p: &Vec<f64>| -> Result<Option<f64>> {
        if admissible(p) {
            score(p)
        } else {
            Ok(None)
        }
    };
    #[cfg(feature = "parallel")]
    let scores: Vec<Option<f64>> = points.par_iter().map(eval).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<Option<f64>> = points.iter().map(eval).collect::<Result<_>>()?;
    let mut ranked: Vec<(f64, usize)> = scores
        .iter()
        .enumerate()
        .filter_map(|(k, s)| s.map(|v| (v, k)))
        .collect();
    // Stable sort keeps the earliest of equal scores first.
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(ORACLE_BEAM);
    for (v, k) in ranked {
        if out.len() == ORACLE_BEAM {
            break;
        }
        let apart = |p: &Vec<f64>| p.iter().zip(&points[k]).any(|(a, b)| (a - b).abs() > 2.5 * step);
        if out.iter().all(|(_, p)| apart(p)) {
            out.push((v, points[k].clone()));
        }
    }
    Ok(out)
}

fn check_alphabet(q: &ProbabilityVector) -> Result<()> {
    if q.len() > ORACLE_MAX_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            size: q.len(),
            limit: ORACLE_MAX_ALPHABET,
        });
    }
    Ok(())
}

fn oracle_rd_options() -> RdOptions {
    RdOptions {
        bisect_tol: 1e-11,
        ..RdOptions::default()
    }
}

/// `D(p‖q)` for a grid point, `None` when `p` puts mass where `q` has none.
fn grid_kl(p: &[f64], q: &ProbabilityVector) -> Option<f64> {
    let total: f64 = p.iter().sum();
    let mut kl = 0.0;
    for (pi, qi) in p.iter().zip(q.as_slice()) {
        let pi = pi / total;
        if pi > 0.0 {
            if *qi == 0.0 {
                return None;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Some(kl.max(0.0))
}

/// `R(Δ, p)`, which is `+∞` when no channel reaches distortion `Δ`.
fn grid_rate(p: &[f64], d: &DistortionMatrix, delta: f64) -> Result<f64> {
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|v| v / total).collect();
    let floor: f64 = p
        .iter()
        .enumerate()
        .map(|(i, pi)| pi * d.row(i).iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    if delta < floor - 1e-12 {
        return Ok(f64::INFINITY);
    }
    Ok(rd_search(d, &p, delta.max(floor), &oracle_rd_options())?.0)
}

/// Brute-force `E_M(R, Δ, q)`: the smallest `D(p‖q)` over grid points with
/// `R(Δ, p) ≥ R + 1e-9`, with `q` itself always a candidate. `+∞` if no point qualifies.
pub fn oracle_exponent(problem: &ExponentProblem, grid: &SimplexGridSpec) -> Result<f64> {
    problem.validate()?;
    grid.validate()?;
    check_alphabet(&problem.q)?;
    let best = zoom_search(problem.q.len(), grid, problem.q.as_slice(), |p| {
        let Some(kl) = grid_kl(p, &problem.q) else {
            return Ok(None);
        };
        let rate = grid_rate(p, &problem.d, problem.delta)?;
        Ok((rate >= problem.rate + ORACLE_MARGIN).then_some(-kl))
    })?;
    Ok(best.map_or(f64::INFINITY, |(v, _)| -v))
}

/// Brute-force `R_M(E, Δ, q)`: the largest `R(Δ, p)` over grid points with
/// `D(p‖q) ≤ E - 1e-9`, with `q` itself always a candidate.
pub fn oracle_inverse(problem: &InverseProblem, grid: &SimplexGridSpec) -> Result<f64> {
    problem.validate()?;
    grid.validate()?;
    check_alphabet(&problem.q)?;
    let q = problem.q.as_slice();
    let best = zoom_search(problem.q.len(), grid, q, |p| {
        let Some(kl) = grid_kl(p, &problem.q) else {
            return Ok(None);
        };
        let is_source = p.iter().zip(q).all(|(a, b)| a == b);
        if !is_source && kl > problem.exponent - ORACLE_MARGIN {
            return Ok(None);
        }
        Ok(Some(grid_rate(p, &problem.d, problem.delta)?))
    })?;
    // q is always admissible, so some point was scored.
    Ok(best.map_or(f64::NEG_INFINITY, |(v, _)| v))
}

/// Inverse exponent restricted to zero-mean Gaussians `N(0, s)` for a source `N(0, σ²)`
/// under squared error: the largest `½ ln(s/Δ)` with `½(s/σ² - 1 - ln(s/σ²)) ≤ E`.
///
/// It lower-bounds the inverse exponent of the continuous source and is meant as a
/// plausibility band for discretized results.
pub fn gaussian_closed_form_check(sigma2: f64, delta: f64, exponent: f64) -> Result<f64> {
    for (name, v) in [("variance", sigma2), ("distortion", delta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::DomainError(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    if !(exponent >= 0.0 && exponent.is_finite()) {
        return Err(Error::DomainError(format!(
            "exponent threshold must be finite and >= 0, got {exponent}"
        )));
    }
    let kl = |t: f64| 0.5 * (t - 1.0 - t.ln());
    // The rate grows with the variance ratio t = s/σ², so take the largest t ≥ 1 on the ball.
    let mut hi = 2.0;
    while kl(hi) < exponent {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kl(mid) <= exponent {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo * sigma2 / delta).ln()).max(0.0))
}

/// Outcome of [`grid_baseline_inverse`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridBaseline {
    /// Best rate over kept pairs, `-∞` when none was kept.
    pub value: f64,
    pub zeta: f64,
    pub xi: f64,
    /// Pairs whose divergence constraint held.
    pub kept: usize,
}

/// Two-dimensional grid search for `R_M(E, Δ, q)` over slope `ζ` and multiplier `ξ`.
///
/// Every pair runs the alternating `(p, a)` iterations of the inverse solver with `ξ`
/// held fixed, under the same budgets and inner solver as `cfg` prescribes for the line
/// search. Pairs with `D(p‖q) ≤ E + 1e-6` are kept and the best certified rate wins.
pub fn grid_baseline_inverse(
    problem: &InverseProblem,
    zetas: &[f64],
    xis: &[f64],
    cfg: &SolverConfig,
) -> Result<GridBaseline> {
    problem.validate()?;
    cfg.validate()?;
    for &v in zetas.iter().chain(xis) {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid values must be finite and >= 0, found {v}"
            )));
        }
    }
    let cfg = SolverConfig {
        feasibility_tol: GRID_KL_TOL,
        ..cfg.clone()
    };
    let support: Vec<usize> = (0..problem.q.len()).filter(|&i| problem.q[i] > 0.0).collect();
    let q: Vec<f64> = support.iter().map(|&i| problem.q[i]).collect();
    let d = problem.d.select_rows(&support);
    let pairs: Vec<(f64, f64)> = zetas
        .iter()
        .flat_map(|&z| xis.iter().map(move |&x| (z, x)))
        .collect();
    let mode = Mode::Inverse {
        radius: problem.exponent,
    };

    let reduced = Reduced::new(&d, &q, problem.delta);
    let run = |&(z, x): &(f64, f64)| -> Result<(f64, bool)> {
        let o = reduced.run_zeta(mode, z, Some(x), &cfg)?;
        Ok((o.trace.value, o.trace.feasible))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(f64, bool)> = pairs.par_iter().map(run).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, bool)> = pairs.iter().map(run).collect::<Result<_>>()?;

    let mut out = GridBaseline {
        value: f64::NEG_INFINITY,
        zeta: f64::NAN,
        xi: f64::NAN,
        kept: 0,
    };
    for (&(z, x), &(value, feasible)) in pairs.iter().zip(&results) {
        if !feasible {
            continue;
        }
        out.kept += 1;
        if value > out.value {
            (out.value, out.zeta, out.xi) = (value, z, x);
        }
    }
    Ok(out)
}

/// Medians over repeated runs of the line search and the grid baseline on one problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub repeats: usize,
    pub amcd_time_s: f64,
    pub grid_time_s: f64,
    /// `grid_time_s / amcd_time_s`.
    pub speedup: f64,
    pub amcd_value: f64,
    pub grid_value: f64,
    /// `amcd_value - grid_value`.
    pub value_gap: f64,
    pub grid_size: (usize, usize),
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times [`solve_inverse`] against [`grid_baseline_inverse`] `repeats` times each.
///
/// Both run under `cfg`, whose slope grid drives the line search; the grid baseline
/// visits `zetas × xis`. Each timing covers the whole call.
pub fn bench_inverse(
    problem: &InverseProblem,
    zetas: &[f64],
    xis: &[f64],
    cfg: &SolverConfig,
    repeats: usize,
) -> Result<BenchSummary> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let (mut amcd_times, mut grid_times) = (Vec::new(), Vec::new());
    let (mut amcd_value, mut grid_value) = (f64::NAN, f64::NAN);
    for _ in 0..repeats {
        let start = Instant::now();
        amcd_value = solve_inverse(problem, cfg)?.value;
        amcd_times.push(start.elapsed().as_secs_f64());
        let start = Instant::now();
        grid_value = grid_baseline_inverse(problem, zetas, xis, cfg)?.value;
        grid_times.push(start.elapsed().as_secs_f64());
    }
    let (amcd_time_s, grid_time_s) = (median(amcd_times), median(grid_times));
    Ok(BenchSummary {
        repeats,
        amcd_time_s,
        grid_time_s,
        speedup: grid_time_s / amcd_time_s,
        amcd_value,
        grid_value,
        value_gap: amcd_value - grid_value,
        grid_size: (zetas.len(), xis.len()),
    })
}
