//! Blahut-Arimoto at a fixed distortion slope and the dual rate-distortion certificate.
//!
//! For a slope `ζ ≥ 0` the iteration alternates
//!
//! ```text
//! w_ij = e^{-ζ d_ij} r_j / Σ_j e^{-ζ d_ij} r_j,      r_j = Σ_i p_i w_ij
//! ```
//!
//! and the certificate `a_i = p_i / Σ_j e^{-ζ d_ij} r_j` satisfies
//! `Σ_i a_i e^{-ζ d_ij} ≤ 1` at the fixed point, so that
//! `-ζΔ + Σ_i p_i ln(a_i / p_i)` lower-bounds `R(Δ, p)` for every `Δ`.
//!
//! The kernel is stored row-shifted, `e^{-ζ (d_ij - min_j d_ij)}`, so every row has a
//! unit entry and large slopes do not underflow whole rows. The shift cancels in `w`
//! and is added back in log space wherever a logarithm of the normalizer is taken.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interior::InteriorPoint;
use crate::prob::{
    delta_max, ConditionalMatrix, DistortionMatrix, ProbabilityVector, SUPPORT_EPSILON,
};

/// Default stopping tolerance on `max_j |r_j' - r_j|`.
pub const DEFAULT_BA_TOL: f64 = 1e-10;
/// Default cap on Blahut-Arimoto iterations per call.
pub const DEFAULT_MAX_INNER_ITER: usize = 1000;
/// Default upper end of the slope bracket used by [`rd_at_distortion`].
pub const DEFAULT_ZETA_CAP: f64 = 1e4;

/// Method used for the fixed-slope subproblem inside the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Plain Blahut-Arimoto alternations, capped at the inner iteration budget.
    BlahutArimoto,
    /// Primal-dual interior-point Newton steps on the same optimality conditions.
    #[default]
    InteriorPoint,
}

/// Certificate `(ζ, a)` of the dual rate-distortion problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub zeta: f64,
    pub a: Vec<f64>,
    #[serde(skip)]
    pub(crate) log_a: Vec<f64>,
}

impl DualCertificate {
    pub(crate) fn from_log(zeta: f64, log_a: Vec<f64>) -> Self {
        let a = log_a.iter().map(|l| l.exp()).collect();
        Self { zeta, a, log_a }
    }

    /// `ln a_i`; finite even where `a_i` itself under- or overflows.
    pub fn log_a(&self) -> &[f64] {
        &self.log_a
    }

    /// `Σ_i a_i e^{-ζ d_ij}` for every reproduction symbol `j`.
    pub fn column_sums(&self, d: &DistortionMatrix) -> Result<Vec<f64>> {
        if d.rows() != self.log_a.len() {
            return Err(Error::DimensionMismatch {
                expected: d.rows(),
                found: self.log_a.len(),
            });
        }
        Ok((0..d.cols())
            .map(|j| {
                (0..d.rows())
                    .map(|i| (self.log_a[i] - self.zeta * d.get(i, j)).exp())
                    .sum()
            })
            .collect())
    }

    pub fn max_column_sum(&self, d: &DistortionMatrix) -> Result<f64> {
        Ok(self
            .column_sums(d)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Dual objective `-ζΔ + Σ_i p_i ln(a_i / p_i)`.
    pub fn dual_value(&self, p: &ProbabilityVector, delta: f64) -> f64 {
        -self.zeta * delta + sum_p_log_ratio(p.as_slice(), &self.log_a)
    }
}

/// `Σ_i p_i (ln a_i - ln p_i)` with `0 ln 0 = 0`.
pub(crate) fn sum_p_log_ratio(p: &[f64], log_a: &[f64]) -> f64 {
    p.iter()
        .zip(log_a)
        .filter(|(pi, _)| **pi > SUPPORT_EPSILON)
        .map(|(pi, la)| pi * (la - pi.ln()))
        .sum()
}

/// Result of [`ba_fixed_slope`].
#[derive(Debug, Clone)]
pub struct BaFixedPoint {
    pub w: ConditionalMatrix,
    pub r: ProbabilityVector,
    pub mutual_information: f64,
    pub expected_distortion: f64,
    pub iterations: usize,
    /// Last `max_j |r_j' - r_j|`.
    pub final_change: f64,
    /// False when the iteration cap was hit before the tolerance; the point is still usable.
    pub converged: bool,
}

/// Outcome of a bounded run of Blahut-Arimoto iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct InnerRun {
    pub iterations: usize,
    pub change: f64,
    pub converged: bool,
}

/// Quantities evaluated once the inner loop stops.
#[derive(Debug, Clone)]
pub(crate) struct Settled {
    pub log_a: Vec<f64>,
    /// `Σ_i p_i ln(a_i / p_i)`.
    pub log_ratio: f64,
    pub expected_distortion: f64,
    pub mutual_information: f64,
    /// `max_j Σ_i a_i e^{-ζ d_ij}`.
    pub max_column_sum: f64,
    /// `max |Σ_i a_i e^{-ζ d_ij} - 1|` over columns with `r_j > SUPPORT_EPSILON`.
    pub support_column_deviation: f64,
}

/// Anything that can produce the slope kernel: a plain matrix or a lumped partition.
pub(crate) trait SlopeModel: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Row shifts `m_i`, shifted kernel `e^{-ζ (d_ij - m_i)}` and the same weighted by `d_ij`,
    /// both row-major. Shifts are in units of distortion.
    fn kernel(&self, zeta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>);
    /// `min_j Σ_i p_i d_ij`.
    fn delta_max(&self, p: &[f64]) -> f64;
}

impl SlopeModel for DistortionMatrix {
    fn rows(&self) -> usize {
        DistortionMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DistortionMatrix::cols(self)
    }

    fn kernel(&self, zeta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (m, n) = (self.rows(), self.cols());
        let mut shift = Vec::with_capacity(m);
        let mut k = Vec::with_capacity(m * n);
        let mut kd = Vec::with_capacity(m * n);
        for i in 0..m {
            let row = self.row(i);
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            shift.push(min);
            for &dij in row {
                let e = (-zeta * (dij - min)).exp();
                k.push(e);
                kd.push(e * dij);
            }
        }
        (shift, k, kd)
    }

    fn delta_max(&self, p: &[f64]) -> f64 {
        (0..self.cols())
            .map(|j| p.iter().enumerate().map(|(i, pi)| pi * self.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cached `e^{-ζ d}` for one slope.
pub(crate) struct SlopeKernel {
    rows: usize,
    cols: usize,
    zeta: f64,
    /// `ζ m_i`.
    shift: Vec<f64>,
    k: Vec<f64>,
    kd: Vec<f64>,
    c: Vec<f64>,
    s: Vec<f64>,
    interior: Option<InteriorPoint>,
}

impl SlopeKernel {
    pub fn new(model: &impl SlopeModel, zeta: f64) -> Self {
        let (shift, k, kd) = model.kernel(zeta);
        let (rows, cols) = (model.rows(), model.cols());
        Self {
            rows,
            cols,
            zeta,
            shift: shift.into_iter().map(|m| zeta * m).collect(),
            k,
            kd,
            c: vec![0.0; rows],
            s: vec![0.0; cols],
            interior: None,
        }
    }

    /// Solves the fixed-slope problem for `p` in place on `r` with the chosen method.
    ///
    /// Blahut-Arimoto continues from `r`; the interior-point method starts from the
    /// uniform distribution and ignores it.
    pub fn solve(
        &mut self,
        p: &[f64],
        r: &mut [f64],
        solver: InnerSolver,
        max_iter: usize,
        tol: f64,
    ) -> Result<InnerRun> {
        match solver {
            InnerSolver::BlahutArimoto => self.iterate(p, r, max_iter, tol, None),
            InnerSolver::InteriorPoint => {
                let (rows, cols) = (self.rows, self.cols);
                let k = &self.k;
                let ipm = self.interior.get_or_insert_with(|| InteriorPoint::new(rows, cols, k));
                Ok(ipm.solve(p, r, max_iter, tol))
            }
        }
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn row(&self, i: usize) -> &[f64] {
        let n = self.cols();
        &self.k[i * n..(i + 1) * n]
    }

    /// `c_i = Σ_j k_ij r_j` (shifted normalizers) for every row with `p_i > 0`.
    fn normalize(&mut self, p: &[f64], r: &[f64]) -> Result<()> {
        let n = self.cols();
        for (i, &pi) in p.iter().enumerate() {
            let ci = dot(&self.k[i * n..(i + 1) * n], r);
            if pi > 0.0 && !(ci > 0.0 && ci.is_finite()) {
                return Err(Error::DegenerateDenominator { row: i });
            }
            self.c[i] = ci;
        }
        Ok(())
    }

    /// `s_j = Σ_i (p_i / c_i) k_ij`, i.e. the multiplicative update `r_j' = r_j s_j`.
    fn column_factors(&mut self, p: &[f64]) {
        let n = self.cols();
        self.s.iter_mut().for_each(|v| *v = 0.0);
        for (i, &pi) in p.iter().enumerate() {
            if pi <= 0.0 {
                continue;
            }
            let coef = pi / self.c[i];
            let row = &self.k[i * n..(i + 1) * n];
            for (sj, kij) in self.s.iter_mut().zip(row) {
                *sj += coef * kij;
            }
        }
    }

    /// Runs at most `max_iter` iterations in place on `r`; optionally records the
    /// functional `-Σ_i p_i ln Σ_j e^{-ζ d_ij} r_j` seen before each `r` update.
    pub fn iterate(
        &mut self,
        p: &[f64],
        r: &mut [f64],
        max_iter: usize,
        tol: f64,
        mut functional: Option<&mut Vec<f64>>,
    ) -> Result<InnerRun> {
        let mut change = f64::INFINITY;
        for it in 0..max_iter {
            self.normalize(p, r)?;
            if let Some(trace) = functional.as_deref_mut() {
                trace.push(self.functional(p));
            }
            self.column_factors(p);
            change = 0.0;
            let mut total = 0.0;
            for (rj, sj) in r.iter_mut().zip(&self.s) {
                let next = *rj * sj;
                change = f64::max(change, (next - *rj).abs());
                *rj = if next > SUPPORT_EPSILON { next } else { 0.0 };
                total += *rj;
            }
            r.iter_mut().for_each(|rj| *rj /= total);
            if change < tol {
                return Ok(InnerRun {
                    iterations: it + 1,
                    change,
                    converged: true,
                });
            }
        }
        Ok(InnerRun {
            iterations: max_iter,
            change,
            converged: max_iter > 0 && change < tol,
        })
    }

    fn functional(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.c.iter().zip(&self.shift))
            .filter(|(pi, _)| **pi > 0.0)
            .map(|(pi, (ci, sh))| -pi * (ci.ln() - sh))
            .sum()
    }

    /// Certificate and diagnostics for the channel built from `r`.
    ///
    /// `log_p` must hold `ln p_i` (it may be finite where `p_i` underflowed).
    pub fn settle(&mut self, p: &[f64], log_p: &[f64], r: &[f64]) -> Result<Settled> {
        self.normalize(p, r)?;
        let n = self.cols();
        let mut log_a = Vec::with_capacity(p.len());
        let mut log_ratio = 0.0;
        let mut expected_distortion = 0.0;
        self.s.iter_mut().for_each(|v| *v = 0.0);
        for (i, &pi) in p.iter().enumerate() {
            let ln_c = self.c[i].ln() - self.shift[i];
            log_a.push(log_p[i] - ln_c);
            if pi <= 0.0 {
                continue;
            }
            log_ratio -= pi * ln_c;
            let coef = pi / self.c[i];
            let row = &self.k[i * n..(i + 1) * n];
            for (sj, kij) in self.s.iter_mut().zip(row) {
                *sj += coef * kij;
            }
            expected_distortion += coef * dot(&self.kd[i * n..(i + 1) * n], r);
        }
        let mut max_column_sum = f64::NEG_INFINITY;
        let mut support_column_deviation: f64 = 0.0;
        let mut kl_out = 0.0;
        // Rows with p_i = 0 carry a_i = 0 and do not contribute to the column sums.
        for (&sj, &rj) in self.s.iter().zip(r) {
            max_column_sum = max_column_sum.max(sj);
            // The channel's output marginal is r_j s_j; this accumulates KL(r s ‖ r).
            let out = rj * sj;
            if rj > SUPPORT_EPSILON {
                support_column_deviation = support_column_deviation.max((sj - 1.0).abs());
                if out > 0.0 {
                    kl_out += out * sj.ln();
                }
            }
        }
        let mutual_information = -self.zeta * expected_distortion + log_ratio - kl_out;
        Ok(Settled {
            log_a,
            log_ratio,
            expected_distortion,
            mutual_information,
            max_column_sum,
            support_column_deviation,
        })
    }

    /// Channel `w_ij = k_ij r_j / c_i`; rows with `p_i = 0` get the same formula.
    fn channel(&mut self, r: &[f64]) -> ConditionalMatrix {
        let (m, n) = (self.rows, self.cols());
        let mut w = Vec::with_capacity(m * n);
        for i in 0..m {
            let row = self.row(i);
            let ci = dot(row, r);
            if ci > 0.0 {
                w.extend(row.iter().zip(r).map(|(k, rj)| k * rj / ci));
            } else {
                w.extend(r.iter().copied());
            }
        }
        ConditionalMatrix::from_normalized_rows(m, n, w)
    }
}

/// Four-lane dot product; the split accumulators let the compiler vectorize.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn check_slope_inputs(
    p: &ProbabilityVector,
    d: &DistortionMatrix,
    zeta: f64,
    r: &ProbabilityVector,
) -> Result<()> {
    if p.len() != d.rows() {
        return Err(Error::DimensionMismatch {
            expected: d.rows(),
            found: p.len(),
        });
    }
    if r.len() != d.cols() {
        return Err(Error::DimensionMismatch {
            expected: d.cols(),
            found: r.len(),
        });
    }
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::DomainError(format!("slope must be finite and >= 0, got {zeta}")));
    }
    Ok(())
}

/// Blahut-Arimoto iterations at slope `zeta` until `max_j |Δr_j| < ba_tol` or the cap.
///
/// Hitting the cap is reported through [`BaFixedPoint::converged`], not as an error.
pub fn ba_fixed_slope(
    p: &ProbabilityVector,
    d: &DistortionMatrix,
    zeta: f64,
    r_init: &ProbabilityVector,
    max_inner_iter: usize,
    ba_tol: f64,
) -> Result<BaFixedPoint> {
    check_slope_inputs(p, d, zeta, r_init)?;
    if let Some(j) = r_init.as_slice().iter().position(|v| *v <= 0.0) {
        return Err(Error::DomainError(format!(
            "initial output distribution must be strictly positive (r[{j}] = 0)"
        )));
    }
    let mut kernel = SlopeKernel::new(d, zeta);
    let mut r = r_init.as_slice().to_vec();
    let run = kernel.iterate(p.as_slice(), &mut r, max_inner_iter, ba_tol, None)?;
    let settled = kernel.settle(p.as_slice(), &p.ln(), &r)?;
    let w = kernel.channel(&r);
    Ok(BaFixedPoint {
        w,
        r: ProbabilityVector::from_normalized(r),
        mutual_information: settled.mutual_information.max(0.0),
        expected_distortion: settled.expected_distortion,
        iterations: run.iterations,
        final_change: run.change,
        converged: run.converged,
    })
}

/// The BA functional `-Σ_i p_i ln Σ_j e^{-ζ d_ij} r_j` after each of `iterations` steps.
pub fn ba_functional_trace(
    p: &ProbabilityVector,
    d: &DistortionMatrix,
    zeta: f64,
    r_init: &ProbabilityVector,
    iterations: usize,
) -> Result<Vec<f64>> {
    check_slope_inputs(p, d, zeta, r_init)?;
    let mut kernel = SlopeKernel::new(d, zeta);
    let mut r = r_init.as_slice().to_vec();
    let mut trace = Vec::with_capacity(iterations);
    kernel.iterate(p.as_slice(), &mut r, iterations, 0.0, Some(&mut trace))?;
    Ok(trace)
}

/// `a_i = p_i / Σ_j e^{-ζ d_ij} r_j` evaluated in log space from the fixed point's `r`.
pub fn dual_certificate(
    p: &ProbabilityVector,
    d: &DistortionMatrix,
    zeta: f64,
    fp: &BaFixedPoint,
) -> Result<DualCertificate> {
    check_slope_inputs(p, d, zeta, &fp.r)?;
    let mut kernel = SlopeKernel::new(d, zeta);
    let settled = kernel.settle(p.as_slice(), &p.ln(), fp.r.as_slice())?;
    Ok(DualCertificate::from_log(zeta, settled.log_a))
}

/// Tolerances for [`rd_at_distortion_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdOptions {
    pub bisect_tol: f64,
    pub ba_tol: f64,
    pub max_inner_iter: usize,
    pub zeta_cap: f64,
    pub inner_solver: InnerSolver,
}

impl Default for RdOptions {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-9,
            ba_tol: 1e-12,
            max_inner_iter: 20_000,
            zeta_cap: DEFAULT_ZETA_CAP,
            inner_solver: InnerSolver::default(),
        }
    }
}

/// `R(Δ, p)` in nats and the slope at which it is attained.
pub fn rd_at_distortion(
    p: &ProbabilityVector,
    d: &DistortionMatrix,
    delta: f64,
    bisect_tol: f64,
) -> Result<(f64, f64)> {
    rd_at_distortion_with(
        p,
        d,
        delta,
        &RdOptions {
            bisect_tol,
            ..RdOptions::default()
        },
    )
}

/// [`rd_at_distortion`] with explicit inner tolerances.
///
/// Bisects on the slope until the fixed point's expected distortion is within
/// `bisect_tol` of `delta`; the reported rate is the best dual value
/// `-ζΔ + Σ p_i ln(a_i/p_i)` over the evaluated slopes, which stays exact on
/// linear stretches of the curve where no slope hits `delta` exactly.
pub fn rd_at_distortion_with(
    p: &ProbabilityVector,
    d: &DistortionMatrix,
    delta: f64,
    opts: &RdOptions,
) -> Result<(f64, f64)> {
    if p.len() != d.rows() {
        return Err(Error::DimensionMismatch {
            expected: d.rows(),
            found: p.len(),
        });
    }
    // Validates the matrix against p as a side effect.
    delta_max(p, d)?;
    rd_search(d, p.as_slice(), delta, opts)
}

/// Slope search behind [`rd_at_distortion_with`] for any kernel model.
pub(crate) fn rd_search(
    model: &impl SlopeModel,
    p: &[f64],
    delta: f64,
    opts: &RdOptions,
) -> Result<(f64, f64)> {
    if !(delta >= 0.0) {
        return Err(Error::DomainError(format!("distortion must be >= 0, got {delta}")));
    }
    if delta >= model.delta_max(p) {
        return Ok((0.0, 0.0));
    }
    let mut search = SlopeSearch::new(model, p, delta, opts);
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let dist = search.eval(hi)?;
        if dist <= delta {
            break;
        }
        lo = hi;
        if hi >= opts.zeta_cap {
            if dist - delta <= opts.bisect_tol {
                break;
            }
            return Err(Error::BisectionFailure {
                delta,
                zeta_cap: opts.zeta_cap,
                closest: dist,
            });
        }
        hi = (hi * 2.0).min(opts.zeta_cap);
    }
    for _ in 0..200 {
        if (search.last_distortion - delta).abs() <= opts.bisect_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if search.eval(mid)? > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((search.best_rate.max(0.0), search.best_zeta))
}

struct SlopeSearch<'a, M> {
    model: &'a M,
    p: &'a [f64],
    log_p: Vec<f64>,
    delta: f64,
    opts: &'a RdOptions,
    r: Vec<f64>,
    best_rate: f64,
    best_zeta: f64,
    last_distortion: f64,
}

impl<'a, M: SlopeModel> SlopeSearch<'a, M> {
    fn new(model: &'a M, p: &'a [f64], delta: f64, opts: &'a RdOptions) -> Self {
        let n = model.cols();
        Self {
            model,
            p,
            log_p: p.iter().map(|v| v.ln()).collect(),
            delta,
            opts,
            r: vec![1.0 / n as f64; n],
            best_rate: f64::NEG_INFINITY,
            best_zeta: 0.0,
            last_distortion: f64::INFINITY,
        }
    }

    fn eval(&mut self, zeta: f64) -> Result<f64> {
        let mut kernel = SlopeKernel::new(self.model, zeta);
        // Warm start from the previous slope, but keep every column alive.
        let floor = 1e-12 / self.r.len() as f64;
        self.r.iter_mut().for_each(|v| *v = v.max(floor));
        let total: f64 = self.r.iter().sum();
        self.r.iter_mut().for_each(|v| *v /= total);
        kernel.solve(
            self.p,
            &mut self.r,
            self.opts.inner_solver,
            self.opts.max_inner_iter,
            self.opts.ba_tol,
        )?;
        let settled = kernel.settle(self.p, &self.log_p, &self.r)?;
        // Rescale a onto the feasible set so the dual value stays a lower bound.
        let slack = settled.max_column_sum.max(1.0).ln();
        let rate = -zeta * self.delta + settled.log_ratio - slack;
        if rate > self.best_rate {
            self.best_rate = rate;
            self.best_zeta = zeta;
        }
        self.last_distortion = settled.expected_distortion;
        Ok(settled.expected_distortion)
    }
}
