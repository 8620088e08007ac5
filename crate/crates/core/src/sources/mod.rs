//! Test sources: discretized continuous densities and the partitioned-alphabet family.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prob::{DistortionMatrix, ProbabilityVector};

pub mod ahlswede;
pub mod lumping;

/// Density family sampled on the midpoint grid.
#[derive(Clone)]
pub enum Family {
    /// Normal density with mean `mean` and standard deviation `sigma`.
    Gaussian { mean: f64, sigma: f64 },
    /// Density `e^{-|x|/b} / (2b)`.
    Laplacian { b: f64 },
    /// Any nonnegative function; it need not integrate to one.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { mean, sigma } => write!(f, "Gaussian {{ mean: {mean}, sigma: {sigma} }}"),
            Self::Laplacian { b } => write!(f, "Laplacian {{ b: {b} }}"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Family {
    /// Log density up to an additive constant, or `None` for callbacks.
    fn log_density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Gaussian { mean, sigma } => Some(-0.5 * ((x - mean) / sigma).powi(2)),
            Self::Laplacian { b } => Some(-x.abs() / b),
            Self::Custom(_) => None,
        }
    }
}

/// Truncation interval `[-L, L]` split into `M` cells.
#[derive(Debug, Clone)]
pub struct DiscretizationSpec {
    pub half_width: f64,
    pub points: usize,
    pub family: Family,
}

impl DiscretizationSpec {
    pub fn gaussian(mean: f64, sigma: f64, half_width: f64, points: usize) -> Self {
        Self {
            half_width,
            points,
            family: Family::Gaussian { mean, sigma },
        }
    }

    pub fn laplacian(b: f64, half_width: f64, points: usize) -> Self {
        Self {
            half_width,
            points,
            family: Family::Laplacian { b },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::DomainError(format!(
                "truncation half-width must be finite and > 0, got {}",
                self.half_width
            )));
        }
        if self.points < 2 {
            return Err(Error::DomainError(format!(
                "need at least 2 grid points, got {}",
                self.points
            )));
        }
        match self.family {
            Family::Gaussian { mean, sigma } if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) => {
                Err(Error::DomainError(format!("invalid Gaussian parameters ({mean}, {sigma})")))
            }
            Family::Laplacian { b } if !(b > 0.0 && b.is_finite()) => {
                Err(Error::DomainError(format!("Laplacian scale must be > 0, got {b}")))
            }
            _ => Ok(()),
        }
    }
}

/// Midpoint grid `x_i = -L + (i - 1/2) δ` with `δ = 2L/M`, and `q_i ∝ density(x_i)`.
pub fn discretize(spec: &DiscretizationSpec) -> Result<(Vec<f64>, ProbabilityVector)> {
    spec.validate()?;
    let m = spec.points;
    // Integer offsets keep the grid exactly symmetric about zero.
    let grid: Vec<f64> = (1..=m)
        .map(|i| (2 * i as i64 - 1 - m as i64) as f64 * spec.half_width / m as f64)
        .collect();
    let masses: Vec<f64> = match &spec.family {
        Family::Custom(f) => grid.iter().map(|&x| f(x)).collect(),
        family => {
            let logs: Vec<f64> = grid.iter().map(|&x| family.log_density(x).unwrap()).collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            logs.iter().map(|l| (l - top).exp()).collect()
        }
    };
    Ok((grid, normalize(&masses)?))
}

/// Scales nonnegative masses onto the simplex.
pub fn normalize(masses: &[f64]) -> Result<ProbabilityVector> {
    if masses.is_empty() {
        return Err(Error::Empty("masses"));
    }
    for (index, &value) in masses.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    Ok(ProbabilityVector::from_normalized(
        masses.iter().map(|v| v / total).collect(),
    ))
}

/// Distortion measure on real-valued alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    Squared,
    Absolute,
}

/// `d_ij = (x_i - y_j)²` or `|x_i - y_j|`.
pub fn distortion_grid(grid_x: &[f64], grid_y: &[f64], kind: DistortionKind) -> Result<DistortionMatrix> {
    if grid_x.is_empty() || grid_y.is_empty() {
        return Err(Error::Empty("grid"));
    }
    let entries = grid_x
        .iter()
        .flat_map(|x| {
            grid_y.iter().map(move |y| match kind {
                DistortionKind::Squared => (x - y) * (x - y),
                DistortionKind::Absolute => (x - y).abs(),
            })
        })
        .collect();
    DistortionMatrix::new(grid_x.len(), grid_y.len(), entries)
}

/// Discretized source with the reproduction alphabet equal to the source grid.
pub fn grid_source(
    spec: &DiscretizationSpec,
    kind: DistortionKind,
) -> Result<(Vec<f64>, ProbabilityVector, DistortionMatrix)> {
    let (grid, q) = discretize(spec)?;
    let d = distortion_grid(&grid, &grid, kind)?;
    Ok((grid, q, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_gaussian() {
        let (grid, q) = discretize(&DiscretizationSpec::gaussian(0.0, 1.0, 5.0, 2)).unwrap();
        assert_eq!(grid, vec![-2.5, 2.5]);
        assert!((q[0] - 0.5).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn four_point_laplacian() {
        let (grid, q) = discretize(&DiscretizationSpec::laplacian(1.0, 4.0, 4)).unwrap();
        assert_eq!(grid, vec![-3.0, -1.0, 1.0, 3.0]);
        let raw = [(-3f64).exp(), (-1f64).exp(), (-1f64).exp(), (-3f64).exp()];
        let total: f64 = raw.iter().sum();
        for i in 0..4 {
            assert!((q[i] - raw[i] / total).abs() < 1e-15);
        }
    }

    #[test]
    fn hundred_point_gaussian_is_symmetric() {
        let (_, q) = discretize(&DiscretizationSpec::gaussian(0.0, 1.0, 5.0, 100)).unwrap();
        assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..100 {
            assert!((q[i] - q[99 - i]).abs() < 1e-14);
        }
    }

    #[test]
    fn custom_density_and_degenerate_masses() {
        let spec = DiscretizationSpec {
            half_width: 1.0,
            points: 4,
            family: Family::Custom(Arc::new(|x: f64| if x > 0.0 { 1.0 } else { 0.0 })),
        };
        let (_, q) = discretize(&spec).unwrap();
        assert_eq!(q.as_slice(), &[0.0, 0.0, 0.5, 0.5]);
        let zero = DiscretizationSpec {
            family: Family::Custom(Arc::new(|_| 0.0)),
            ..spec
        };
        assert_eq!(discretize(&zero).unwrap_err(), Error::DegenerateDensity);
    }

    #[test]
    fn far_gaussian_does_not_underflow() {
        let (_, q) = discretize(&DiscretizationSpec::gaussian(100.0, 0.1, 1.0, 10)).unwrap();
        assert!((q[9] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_grid_examples() {
        let sq = distortion_grid(&[0.0, 1.0], &[0.0, 1.0], DistortionKind::Squared).unwrap();
        assert_eq!(sq.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let ab = distortion_grid(&[0.0, 1.0], &[0.0, 1.0], DistortionKind::Absolute).unwrap();
        assert_eq!(ab.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let one = distortion_grid(&[-1.0, 1.0], &[0.0], DistortionKind::Squared).unwrap();
        assert_eq!(one.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(discretize(&DiscretizationSpec::gaussian(0.0, 1.0, 5.0, 1)).is_err());
        assert!(discretize(&DiscretizationSpec::gaussian(0.0, 0.0, 5.0, 10)).is_err());
        assert!(discretize(&DiscretizationSpec::laplacian(1.0, -1.0, 10)).is_err());
        assert!(distortion_grid(&[], &[0.0], DistortionKind::Absolute).is_err());
    }

    proptest! {
        #[test]
        fn discretized_sources_are_valid(
            half_width in 0.5f64..10.0,
            points in 2usize..200,
            sigma in 0.1f64..5.0,
            laplace in any::<bool>(),
        ) {
            let spec = if laplace {
                DiscretizationSpec::laplacian(sigma, half_width, points)
            } else {
                DiscretizationSpec::gaussian(0.0, sigma, half_width, points)
            };
            let (grid, q) = discretize(&spec).unwrap();
            prop_assert_eq!(grid.len(), points);
            prop_assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..points {
                prop_assert!((q[i] - q[points - 1 - i]).abs() < 1e-14);
            }
        }
    }
}
