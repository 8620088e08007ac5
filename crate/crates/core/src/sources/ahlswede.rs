//! Partitioned-alphabet sources on which the error exponent jumps.
//!
//! The alphabet is `X_A ∪ X_B` with reproduction alphabet equal to it. The source is
//! the mixture `Q_ξ = ξ Q_A + (1-ξ) Q_B` of the uniform distributions on the two parts.
//! Restricting to the mixtures `Q_λ` gives the exponent
//! `min { D₂(λ‖ξ) : λ ∈ [0, 1], R(Δ | Q_λ) ≥ R }`, where `D₂` is the binary divergence.
//! For a distortion matrix invariant under permutations within each part, this
//! restriction is exact.
//!
//! The built-in matrix charges Hamming distortion inside `X_A`, `a` for any substitution
//! inside `X_B`, and `1` across parts. Any other matrix can be supplied instead.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::exponent::{solve_exponent, solve_exponent_lumped, ExponentProblem};
use crate::prob::{binary_kl, DistortionMatrix, ProbabilityVector};
use crate::rd::{rd_search, RdOptions};
use crate::report::SolveReport;
use crate::sources::lumping::Lumping;

#[derive(Debug, Clone, PartialEq)]
pub struct AhlswedeSpec {
    pub size_a: usize,
    pub size_b: usize,
    /// Substitution cost inside `X_B` for the built-in matrix.
    pub a_param: f64,
    /// Mixture weight on `X_A`.
    pub xi: f64,
    pub distortion_override: Option<DistortionMatrix>,
    /// Use the built-in matrix when no override is given.
    pub allow_default: bool,
}

impl AhlswedeSpec {
    /// `|X_A| = 8`, `|X_B| = 8³`, `a = 0.34`, `ξ = 0.01`.
    pub fn standard() -> Self {
        Self {
            size_a: 8,
            size_b: 512,
            a_param: 0.34,
            xi: 0.01,
            distortion_override: None,
            allow_default: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size_a == 0 || self.size_b == 0 {
            return Err(Error::DomainError("both parts of the alphabet must be nonempty".into()));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::DomainError(format!("mixture weight must lie in [0, 1], got {}", self.xi)));
        }
        if !(self.a_param >= 0.0 && self.a_param.is_finite()) {
            return Err(Error::DomainError(format!("cost parameter must be >= 0, got {}", self.a_param)));
        }
        Ok(())
    }
}

/// The built-in block matrix described in the module documentation.
pub fn default_distortion(size_a: usize, size_b: usize, a_param: f64) -> Result<DistortionMatrix> {
    let n = size_a + size_b;
    let entries = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| match (i < size_a, j < size_a) {
                _ if i == j => 0.0,
                (false, false) => a_param,
                _ => 1.0,
            })
        })
        .collect();
    DistortionMatrix::new(n, n, entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AhlswedeInstance {
    pub q: ProbabilityVector,
    pub d: DistortionMatrix,
    pub q_a: ProbabilityVector,
    pub q_b: ProbabilityVector,
    pub size_a: usize,
    pub xi: f64,
}

/// Builds `Q_ξ` over `X_A ∪ X_B` (A first) and the distortion matrix.
pub fn ahlswede_build(spec: &AhlswedeSpec) -> Result<AhlswedeInstance> {
    spec.validate()?;
    let n = spec.size_a + spec.size_b;
    let d = match &spec.distortion_override {
        Some(d) if d.rows() != n || d.cols() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d.rows().max(d.cols()),
            })
        }
        Some(d) => d.clone(),
        None if spec.allow_default => default_distortion(spec.size_a, spec.size_b, spec.a_param)?,
        None => return Err(Error::MissingDistortion),
    };
    let q_a = ProbabilityVector::uniform(spec.size_a)?;
    let q_b = ProbabilityVector::uniform(spec.size_b)?;
    Ok(AhlswedeInstance {
        q: mix(&q_a, &q_b, spec.xi),
        d,
        q_a,
        q_b,
        size_a: spec.size_a,
        xi: spec.xi,
    })
}

fn mix(q_a: &ProbabilityVector, q_b: &ProbabilityVector, lambda: f64) -> ProbabilityVector {
    let v = q_a
        .as_slice()
        .iter()
        .map(|x| lambda * x)
        .chain(q_b.as_slice().iter().map(|x| (1.0 - lambda) * x))
        .collect();
    ProbabilityVector::from_normalized(v)
}

impl AhlswedeInstance {
    /// `Q_λ = λ Q_A ⊕ (1-λ) Q_B`.
    pub fn mixture(&self, lambda: f64) -> ProbabilityVector {
        mix(&self.q_a, &self.q_b, lambda)
    }

    /// The two-part partition, if the matrix is invariant under it.
    pub fn lumping(&self) -> Option<Lumping> {
        let n = self.d.rows();
        let classes = vec![(0..self.size_a).collect(), (self.size_a..n).collect()];
        Lumping::new(&self.d, classes.clone(), classes).ok()
    }

    /// `E_M(R, Δ, Q_ξ)` by the alternating solver, lumped when the matrix allows it.
    pub fn solve_exponent(&self, delta: f64, rate: f64, cfg: &SolverConfig) -> Result<SolveReport> {
        let problem = ExponentProblem::new(self.q.clone(), self.d.clone(), rate, delta)?;
        match self.lumping() {
            Some(l) => solve_exponent_lumped(&problem, &l, cfg),
            None => solve_exponent(&problem, cfg),
        }
    }
}

enum RateModel {
    Lumped(Lumping),
    Full(AhlswedeInstance),
}

/// `R(Δ | Q_λ)` tabulated on a uniform grid of `λ ∈ [0, 1]`.
pub struct TheoryCurve {
    model: RateModel,
    xi: f64,
    delta: f64,
    opts: RdOptions,
    lambdas: Vec<f64>,
    rates: Vec<f64>,
    rate_at_xi: f64,
}

const BOUNDARY_STEPS: usize = 40;

impl TheoryCurve {
    pub fn new(spec: &AhlswedeSpec, delta: f64, lambda_grid: usize) -> Result<Self> {
        let instance = ahlswede_build(spec)?;
        Self::from_instance(instance, delta, lambda_grid)
    }

    pub fn from_instance(instance: AhlswedeInstance, delta: f64, lambda_grid: usize) -> Result<Self> {
        if lambda_grid < 2 {
            return Err(Error::DomainError("mixture grid needs at least 2 points".into()));
        }
        let xi = instance.xi;
        let model = match instance.lumping() {
            Some(l) => RateModel::Lumped(l),
            None => RateModel::Full(instance),
        };
        let mut curve = Self {
            model,
            xi,
            delta,
            opts: RdOptions::default(),
            lambdas: (0..lambda_grid)
                .map(|k| k as f64 / (lambda_grid - 1) as f64)
                .collect(),
            rates: Vec::new(),
            rate_at_xi: 0.0,
        };
        curve.rates = curve
            .lambdas
            .iter()
            .map(|&l| curve.rate_at(l))
            .collect::<Result<_>>()?;
        curve.rate_at_xi = curve.rate_at(xi)?;
        Ok(curve)
    }

    /// `R(Δ | Q_λ)`.
    pub fn rate_at(&self, lambda: f64) -> Result<f64> {
        let rate = match &self.model {
            RateModel::Lumped(l) => rd_search(l, &[lambda, 1.0 - lambda], self.delta, &self.opts)?,
            RateModel::Full(inst) => rd_search(&inst.d, inst.mixture(lambda).as_slice(), self.delta, &self.opts)?,
        };
        Ok(rate.0)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Largest tabulated `R(Δ | Q_λ)`; beyond it the exponent is infinite.
    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(self.rate_at_xi, f64::max)
    }

    /// Bisects between an infeasible and a feasible mixture weight; returns the feasible end.
    fn boundary(&self, mut infeasible: f64, mut feasible: f64, rate: f64) -> Result<f64> {
        for _ in 0..BOUNDARY_STEPS {
            let mid = 0.5 * (infeasible + feasible);
            if self.rate_at(mid)? >= rate {
                feasible = mid;
            } else {
                infeasible = mid;
            }
        }
        Ok(feasible)
    }

    /// `min { D₂(λ‖ξ) : R(Δ | Q_λ) ≥ R }`, or `+∞` when no tabulated weight qualifies.
    pub fn exponent(&self, rate: f64) -> Result<f64> {
        if rate <= self.rate_at_xi {
            return Ok(0.0);
        }
        let xi = self.xi;
        let n = self.lambdas.len();
        let mut best = f64::INFINITY;
        if let Some(k) = (0..n).find(|&k| self.lambdas[k] > xi && self.rates[k] >= rate) {
            let lo = if k > 0 { self.lambdas[k - 1].max(xi) } else { xi };
            let lam = self.boundary(lo, self.lambdas[k], rate)?;
            best = best.min(binary_kl(lam, xi)?);
        }
        if let Some(k) = (0..n).rev().find(|&k| self.lambdas[k] < xi && self.rates[k] >= rate) {
            let hi = if k + 1 < n { self.lambdas[k + 1].min(xi) } else { xi };
            let lam = self.boundary(hi, self.lambdas[k], rate)?;
            best = best.min(binary_kl(lam, xi)?);
        }
        Ok(best)
    }
}

/// One-shot evaluation of the mixture-restricted exponent.
pub fn ahlswede_theoretical_curve(spec: &AhlswedeSpec, delta: f64, rate: f64, lambda_grid: usize) -> Result<f64> {
    TheoryCurve::new(spec, delta, lambda_grid)?.exponent(rate)
}

/// The largest single-step rise of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    /// Index of the point after the rise.
    pub index: usize,
    pub rate_before: f64,
    pub rate_after: f64,
    pub from: f64,
    pub to: f64,
}

/// Largest rise between consecutive finite values, if it exceeds `threshold`.
pub fn detect_jump(rates: &[f64], values: &[f64], threshold: f64) -> Option<Jump> {
    (1..values.len().min(rates.len()))
        .filter(|&k| values[k].is_finite() && values[k - 1].is_finite())
        .map(|k| Jump {
            index: k,
            rate_before: rates[k - 1],
            rate_after: rates[k],
            from: values[k - 1],
            to: values[k],
        })
        .filter(|j| j.to - j.from > threshold)
        .max_by(|a, b| (a.to - a.from).total_cmp(&(b.to - b.from)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(xi: f64) -> AhlswedeSpec {
        AhlswedeSpec {
            size_a: 2,
            size_b: 8,
            a_param: 0.34,
            xi,
            distortion_override: None,
            allow_default: true,
        }
    }

    #[test]
    fn standard_mixture_masses() {
        let inst = ahlswede_build(&AhlswedeSpec::standard()).unwrap();
        assert_eq!(inst.q.len(), 520);
        assert!((0..8).all(|i| (inst.q[i] - 0.01 / 8.0).abs() < 1e-18));
        assert!((8..520).all(|i| (inst.q[i] - 0.99 / 512.0).abs() < 1e-18));
        assert!(inst.lumping().is_some());
    }

    #[test]
    fn degenerate_and_even_mixtures() {
        let inst = ahlswede_build(&AhlswedeSpec { xi: 1.0, ..small_spec(1.0) }).unwrap();
        assert_eq!(&inst.q.as_slice()[..2], inst.q_a.as_slice());
        assert!(inst.q.as_slice()[2..].iter().all(|v| *v == 0.0));
        let inst = ahlswede_build(&small_spec(0.5)).unwrap();
        let mut expected = vec![0.25, 0.25];
        expected.extend([0.0625; 8]);
        assert_eq!(inst.q.as_slice(), expected.as_slice());
    }

    #[test]
    fn missing_matrix_is_an_error() {
        let spec = AhlswedeSpec {
            allow_default: false,
            ..small_spec(0.5)
        };
        assert_eq!(ahlswede_build(&spec).unwrap_err(), Error::MissingDistortion);
        let wrong = AhlswedeSpec {
            distortion_override: Some(DistortionMatrix::from_rows(&[vec![0.0]]).unwrap()),
            ..small_spec(0.5)
        };
        assert!(ahlswede_build(&wrong).is_err());
    }

    #[test]
    fn default_matrix_layout() {
        let d = default_distortion(2, 3, 0.3).unwrap();
        assert_eq!(d.row(0), &[0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(d.row(3), &[1.0, 1.0, 0.3, 0.0, 0.3]);
    }

    #[test]
    fn theory_curve_basics() {
        let curve = TheoryCurve::new(&small_spec(0.2), 0.1, 101).unwrap();
        assert_eq!(curve.exponent(0.0).unwrap(), 0.0);
        let max = curve.max_rate();
        assert!(curve.exponent(max + 0.01).unwrap().is_infinite());
        let mut prev = 0.0;
        for k in 0..=20 {
            let e = curve.exponent(max * k as f64 / 20.0).unwrap();
            assert!(e >= prev - 1e-12);
            prev = e;
        }
    }

    #[test]
    fn jump_detection() {
        let rates = [0.0, 1.0, 2.0, 3.0, 4.0];
        let values = [0.0, 0.05, 0.1, 0.9, f64::INFINITY];
        let j = detect_jump(&rates, &values, 0.1).unwrap();
        assert_eq!((j.index, j.from, j.to), (3, 0.1, 0.9));
        assert!(detect_jump(&rates, &[0.0, 0.05, 0.1, 0.15, 0.2], 0.1).is_none());
    }
}
