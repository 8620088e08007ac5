//! Solver settings shared by the exponent and inverse solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::{InnerSolver, DEFAULT_BA_TOL, DEFAULT_MAX_INNER_ITER};

/// Slopes visited by the line search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaGrid {
    /// `ζ_k = k · mesh` for `k = 1..=count`.
    Mesh { count: usize, mesh: f64 },
    Explicit(Vec<f64>),
}

impl ZetaGrid {
    /// `count` evenly spaced slopes on `(0, max]`.
    pub fn uniform(count: usize, max: f64) -> Self {
        Self::Mesh {
            count,
            mesh: max / count.max(1) as f64,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            Self::Mesh { count, mesh } => (1..=*count).map(|k| k as f64 * mesh).collect(),
            Self::Explicit(v) => v.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(Error::InvalidConfig("slope grid is empty".into()));
        }
        if let Some(z) = pts.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "slope grid points must be finite and > 0, found {z}"
            )));
        }
        Ok(())
    }
}

impl Default for ZetaGrid {
    fn default() -> Self {
        Self::uniform(100, 5.0)
    }
}

/// Iteration budgets and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub zeta_grid: ZetaGrid,
    pub max_outer_iter: usize,
    pub max_inner_iter: usize,
    /// Method for the fixed-slope subproblem; `ba_tol` and `max_inner_iter` apply to either.
    pub inner_solver: InnerSolver,
    pub ba_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Stop a slope once the objective moves by less than this between outer iterations.
    pub objective_stop_tol: f64,
    pub lambda_cap: f64,
    pub xi_cap: f64,
    /// Slack allowed on the constraints when deciding whether a slope's result counts.
    pub feasibility_tol: f64,
    /// Golden-section search between the neighbours of the best grid slope.
    pub refine_zeta: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            zeta_grid: ZetaGrid::default(),
            max_outer_iter: 200,
            max_inner_iter: DEFAULT_MAX_INNER_ITER,
            inner_solver: InnerSolver::default(),
            ba_tol: DEFAULT_BA_TOL,
            newton_tol: 1e-12,
            newton_max_iter: 200,
            objective_stop_tol: 1e-5,
            lambda_cap: 1e8,
            xi_cap: 1e8,
            feasibility_tol: 1e-6,
            refine_zeta: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.zeta_grid.validate()?;
        let positive = [
            ("ba_tol", self.ba_tol),
            ("newton_tol", self.newton_tol),
            ("objective_stop_tol", self.objective_stop_tol),
            ("lambda_cap", self.lambda_cap),
            ("xi_cap", self.xi_cap),
            ("feasibility_tol", self.feasibility_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("max_outer_iter", self.max_outer_iter),
            ("max_inner_iter", self.max_inner_iter),
            ("newton_max_iter", self.newton_max_iter),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_covers_zero_to_five() {
        let pts = ZetaGrid::default().points();
        assert_eq!(pts.len(), 100);
        assert!((pts[0] - 0.05).abs() < 1e-15);
        assert!((pts[99] - 5.0).abs() < 1e-12);
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_settings() {
        let mut cfg = SolverConfig {
            zeta_grid: ZetaGrid::Explicit(vec![0.0, 1.0]),
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.zeta_grid = ZetaGrid::Explicit(vec![]);
        assert!(cfg.validate().is_err());
        cfg.zeta_grid = ZetaGrid::default();
        cfg.newton_tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.newton_tol = 1e-12;
        cfg.max_outer_iter = 0;
        assert!(cfg.validate().is_err());
    }
}
