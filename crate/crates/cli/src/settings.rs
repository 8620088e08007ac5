//! Turns parsed flags into library inputs.

use std::fs;

use amcd::io::{read_distribution, read_matrix};
use amcd::sources::{grid_source, DiscretizationSpec, DistortionKind};
use amcd::{DistortionMatrix, InnerSolver, ProbabilityVector, SolverConfig, ZetaGrid};

use crate::args::{InnerKind, SolverArgs, SourceArgs, SourceKind};
use crate::{CliError, Result};

const DEFAULT_ZETA_POINTS: usize = 100;
const DEFAULT_ZETA_MAX: f64 = 5.0;

/// `base`, replaced by the config file if one is given, then overridden flag by flag.
pub fn solver_config(args: &SolverArgs, base: SolverConfig) -> Result<SolverConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            toml::from_str(&text).map_err(|e| CliError::Config {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => base,
    };
    if args.zeta_points.is_some() || args.zeta_max.is_some() {
        cfg.zeta_grid = ZetaGrid::uniform(
            args.zeta_points.unwrap_or(DEFAULT_ZETA_POINTS),
            args.zeta_max.unwrap_or(DEFAULT_ZETA_MAX),
        );
    }
    if args.refine {
        cfg.refine_zeta = true;
    }
    if let Some(n) = args.max_outer_iter {
        cfg.max_outer_iter = n;
    }
    if let Some(n) = args.max_inner_iter {
        cfg.max_inner_iter = n;
    }
    if let Some(tol) = args.stop_tol {
        cfg.objective_stop_tol = tol;
    }
    if let Some(kind) = args.inner_solver {
        cfg.inner_solver = match kind {
            InnerKind::InteriorPoint => InnerSolver::InteriorPoint,
            InnerKind::BlahutArimoto => InnerSolver::BlahutArimoto,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn source(args: &SourceArgs) -> Result<(ProbabilityVector, DistortionMatrix)> {
    let files = args.dist_matrix.is_some() || args.q.is_some();
    let (spec, kind) = match args.source {
        SourceKind::Custom => {
            let (Some(dm), Some(qp)) = (&args.dist_matrix, &args.q) else {
                return Err(CliError::Usage(
                    "--source custom needs both --dist-matrix and --q".into(),
                ));
            };
            let d = read_matrix(dm)?;
            let q = read_distribution(qp)?;
            if q.len() != d.rows() {
                return Err(amcd::Error::DimensionMismatch {
                    expected: d.rows(),
                    found: q.len(),
                }
                .into());
            }
            return Ok((q, d));
        }
        _ if files => {
            return Err(CliError::Usage(
                "--dist-matrix and --q are only read with --source custom".into(),
            ))
        }
        SourceKind::Gaussian => (
            DiscretizationSpec::gaussian(args.mean, args.sigma, args.half_width, args.alphabet),
            DistortionKind::Squared,
        ),
        SourceKind::Laplacian => (
            DiscretizationSpec::laplacian(args.b, args.half_width, args.alphabet),
            DistortionKind::Absolute,
        ),
    };
    let (_, q, d) = grid_source(&spec, kind)?;
    Ok((q, d))
}
