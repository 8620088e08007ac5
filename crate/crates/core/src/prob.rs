//! Probability-simplex primitives shared by every solver.
//!
//! All quantities are in nats. Validation never renormalizes: a vector that
//! misses the simplex by more than the tolerance is rejected, and callers that
//! produce unnormalized masses (the discretizer) normalize explicitly through
//! [`crate::sources::normalize`].

use serde::Serialize;

use crate::error::{Error, Result};

/// Entries at or below this value are treated as off-support.
pub const SUPPORT_EPSILON: f64 = 1e-300;

/// Default tolerance on `|Σ p − 1|` used by [`ProbabilityVector::new`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A finite distribution over an alphabet of size `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    values: Vec<f64>,
}

impl ProbabilityVector {
    /// Validates `values` against the simplex with the default tolerance.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_simplex(&values, SIMPLEX_TOL)?;
        Ok(Self { values })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Empty("probability vector"));
        }
        Ok(Self {
            values: vec![1.0 / len as f64; len],
        })
    }

    /// Wraps values that are a softmax or an explicit normalization.
    pub(crate) fn from_normalized(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        debug_assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn support_mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| *v > SUPPORT_EPSILON).collect()
    }

    /// Natural logarithms of the entries (`-inf` off the support).
    pub fn ln(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| if *v > SUPPORT_EPSILON { v.ln() } else { f64::NEG_INFINITY })
            .collect()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        l1_distance(&self.values, &other.values)
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Checks that `values` lies on the simplex without mutating it.
pub fn validate_simplex(values: &[f64], tol: f64) -> Result<ProbabilityVector> {
    if values.is_empty() {
        return Err(Error::Empty("probability vector"));
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::SumNotOne { sum, tol });
    }
    Ok(ProbabilityVector {
        values: values.to_vec(),
    })
}

/// Nonnegative `M × N` distortion matrix, row-major, rows indexed by source symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    pub source_labels: Option<Vec<String>>,
    pub reproduction_labels: Option<Vec<String>>,
}

impl DistortionMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("distortion matrix"));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { index, value });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
            source_labels: None,
            reproduction_labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                found: bad.len(),
            });
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Keeps only the listed source rows.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let entries = keep.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self {
            rows: keep.len(),
            cols: self.cols,
            entries,
            source_labels: self
                .source_labels
                .as_ref()
                .map(|l| keep.iter().map(|&i| l[i].clone()).collect()),
            reproduction_labels: self.reproduction_labels.clone(),
        }
    }
}

/// Row-stochastic `M × N` matrix; row `i` is `P(Y | X = x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl ConditionalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        for i in 0..rows {
            validate_simplex(&entries[i * cols..(i + 1) * cols], SIMPLEX_TOL)?;
        }
        Ok(Self { rows, cols, entries })
    }

    pub(crate) fn from_normalized_rows(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }
}

/// `D(p‖q) = Σ p_i ln(p_i / q_i)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&pi, &qi)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pi <= SUPPORT_EPSILON {
            continue;
        }
        if qi <= SUPPORT_EPSILON {
            return Err(Error::SupportMismatch { index });
        }
        total += pi * (pi.ln() - qi.ln());
    }
    // Rounding can push the sum of a near-zero divergence slightly negative.
    Ok(total.max(0.0))
}

/// Two-point divergence `D(lam ‖ xi)` between Bernoulli distributions.
pub fn binary_kl(lam: f64, xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lam) || !(0.0..=1.0).contains(&xi) {
        return Err(Error::DomainError(format!(
            "binary divergence needs arguments in [0, 1], got ({lam}, {xi})"
        )));
    }
    if lam == xi {
        return Ok(0.0);
    }
    if xi == 0.0 || xi == 1.0 {
        return Err(Error::DomainError(format!(
            "binary divergence is infinite for xi = {xi} and lam = {lam}"
        )));
    }
    let mut total = 0.0;
    if lam > 0.0 {
        total += lam * (lam / xi).ln();
    }
    if lam < 1.0 {
        total += (1.0 - lam) * ((1.0 - lam) / (1.0 - xi)).ln();
    }
    Ok(total.max(0.0))
}

/// Smallest expected distortion of a constant reproduction: `min_j Σ_i q_i d_ij`.
pub fn delta_max(q: &ProbabilityVector, d: &DistortionMatrix) -> Result<f64> {
    if q.len() != d.rows() {
        return Err(Error::DimensionMismatch {
            expected: d.rows(),
            found: q.len(),
        });
    }
    let best = (0..d.cols())
        .map(|j| {
            q.as_slice()
                .iter()
                .enumerate()
                .map(|(i, qi)| qi * d.get(i, j))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

/// `ln Σ exp(x_i)`, ignoring `-inf` entries; `-inf` for an all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn simplex_validation() {
        assert!(validate_simplex(&[0.5, 0.5], 1e-12).is_ok());
        assert!(matches!(
            validate_simplex(&[0.7, 0.4], 1e-12),
            Err(Error::SumNotOne { .. })
        ));
        assert!(matches!(
            validate_simplex(&[1.0, -1e-6, 1e-6], 1e-12),
            Err(Error::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(validate_simplex(&[], 1e-12), Err(Error::Empty(_))));
        assert!(matches!(
            validate_simplex(&[f64::NAN, 1.0], 1e-12),
            Err(Error::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn validation_does_not_renormalize() {
        let v = [0.25, 0.25, 0.5 + 5e-13];
        let p = validate_simplex(&v, 1e-12).unwrap();
        assert_eq!(p.as_slice(), &v);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&pv(&[0.5, 0.5]), &pv(&[0.5, 0.5])).unwrap(), 0.0);
        let v = kl_divergence(&pv(&[1.0, 0.0]), &pv(&[0.5, 0.5])).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            kl_divergence(&pv(&[0.5, 0.5]), &pv(&[1.0, 0.0])),
            Err(Error::SupportMismatch { index: 1 })
        );
    }

    #[test]
    fn binary_kl_examples() {
        assert_eq!(binary_kl(0.3, 0.3).unwrap(), 0.0);
        assert!((binary_kl(0.0, 0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((binary_kl(1.0, 0.01).unwrap() - 100f64.ln()).abs() < 1e-12);
        assert!(binary_kl(0.2, 0.0).is_err());
        assert!(binary_kl(0.2, 1.0).is_err());
        assert_eq!(binary_kl(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_max_examples() {
        let hamming = DistortionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(delta_max(&pv(&[0.5, 0.5]), &hamming).unwrap(), 0.5);
        assert_eq!(delta_max(&pv(&[1.0, 0.0]), &hamming).unwrap(), 0.0);
        let d = DistortionMatrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        assert!((delta_max(&pv(&[0.3, 0.7]), &d).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(
            delta_max(&pv(&[0.2, 0.3, 0.5]), &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distortion_matrix_rejects_bad_entries() {
        assert!(DistortionMatrix::new(1, 2, vec![0.0, -1.0]).is_err());
        assert!(DistortionMatrix::new(1, 2, vec![0.0, f64::INFINITY]).is_err());
        assert!(DistortionMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(DistortionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn conditional_rows_must_sum_to_one() {
        assert!(ConditionalMatrix::new(2, 2, vec![0.5, 0.5, 1.0, 0.0]).is_ok());
        assert!(ConditionalMatrix::new(2, 2, vec![0.5, 0.6, 1.0, 0.0]).is_err());
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        let v = log_sum_exp(&[-1000.0, f64::NEG_INFINITY]);
        assert_eq!(v, -1000.0);
    }

    fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero mass", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(p in simplex(5), q in simplex(5)) {
            let p = ProbabilityVector::from_normalized(p);
            let q = ProbabilityVector::from_normalized(q.iter().map(|x| x * 0.9 + 0.02).collect());
            let v = kl_divergence(&p, &q).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn binary_kl_is_strictly_convex(xi in 0.01f64..0.99, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!((a - b).abs() > 1e-3);
            let mid = 0.5 * (a + b);
            let lhs = binary_kl(mid, xi).unwrap();
            let rhs = 0.5 * (binary_kl(a, xi).unwrap() + binary_kl(b, xi).unwrap());
            prop_assert!(lhs <= rhs - 1e-12);
        }

        #[test]
        fn zero_column_gives_zero_delta_max(q in simplex(4), vals in proptest::collection::vec(0.0f64..3.0, 12), col in 0usize..3) {
            let mut entries = vals;
            for i in 0..4 {
                entries[i * 3 + col] = 0.0;
            }
            let d = DistortionMatrix::new(4, 3, entries).unwrap();
            let q = ProbabilityVector::from_normalized(q);
            prop_assert_eq!(delta_max(&q, &d).unwrap(), 0.0);
        }

        #[test]
        fn operations_are_pure(p in simplex(4), q in simplex(4)) {
            let p = ProbabilityVector::from_normalized(p);
            let q = ProbabilityVector::from_normalized(q.iter().map(|x| x * 0.5 + 0.125).collect());
            let a = kl_divergence(&p, &q).unwrap();
            let b = kl_divergence(&p, &q).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
