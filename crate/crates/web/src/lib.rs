//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every curve comes back as a flat array `[x0, y0, x1, y1, ...]`. Infinite values
//! (unreachable thresholds) are passed through and left to the page to skip.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use amcd::sources::{grid_source, DiscretizationSpec, DistortionKind};
use amcd::{
    delta_max, rd_at_distortion, solve_exponent, solve_inverse, DistortionMatrix, ExponentProblem,
    InverseProblem, ProbabilityVector, SolverConfig, ZetaGrid,
};
use wasm_bindgen::prelude::*;

/// Truncation half-width used by every demo source.
const HALF_WIDTH: f64 = 5.0;
/// Slopes per solve; coarser than the library default to keep the page responsive.
const ZETA_POINTS: usize = 50;
const ZETA_MAX: f64 = 5.0;

fn source(family: &str, points: usize) -> Result<(ProbabilityVector, DistortionMatrix), String> {
    let (spec, kind) = match family {
        "gaussian" => (DiscretizationSpec::gaussian(0.0, 1.0, HALF_WIDTH, points), DistortionKind::Squared),
        "laplacian" => (DiscretizationSpec::laplacian(1.0, HALF_WIDTH, points), DistortionKind::Absolute),
        other => return Err(format!("unknown source family {other:?}")),
    };
    let (_, q, d) = grid_source(&spec, kind).map_err(|e| e.to_string())?;
    Ok((q, d))
}

fn config() -> SolverConfig {
    SolverConfig {
        zeta_grid: ZetaGrid::uniform(ZETA_POINTS, ZETA_MAX),
        ..SolverConfig::default()
    }
}

/// `samples` evenly spaced values on `[from, to]`.
fn spaced(from: f64, to: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 || !(from < to) {
        return Err(format!("need at least 2 samples on an increasing range, got {samples} on [{from}, {to}]"));
    }
    let step = (to - from) / (samples - 1) as f64;
    Ok((0..samples).map(|k| from + k as f64 * step).collect())
}

/// `R(Δ, q)` for `Δ` from a small fraction of `Δmax` up to `Δmax`.
pub fn rate_distortion(family: &str, points: usize, samples: usize) -> Result<Vec<f64>, String> {
    let (q, d) = source(family, points)?;
    let top = delta_max(&q, &d).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * samples);
    for delta in spaced(0.02 * top, top, samples)? {
        let (rate, _) = rd_at_distortion(&q, &d, delta, 1e-9).map_err(|e| e.to_string())?;
        out.extend([delta, rate]);
    }
    Ok(out)
}

/// `E_M(R, Δ, q)` over `R ∈ [from, to]`.
pub fn exponents(family: &str, points: usize, delta: f64, from: f64, to: f64, samples: usize) -> Result<Vec<f64>, String> {
    let (q, d) = source(family, points)?;
    let cfg = config();
    let mut out = Vec::with_capacity(2 * samples);
    for rate in spaced(from, to, samples)? {
        let problem = ExponentProblem::new(q.clone(), d.clone(), rate, delta).map_err(|e| e.to_string())?;
        let report = solve_exponent(&problem, &cfg).map_err(|e| e.to_string())?;
        out.extend([rate, report.value]);
    }
    Ok(out)
}

/// `R_M(E, Δ, q)` over `E ∈ [0, e_max]`.
pub fn inverses(family: &str, points: usize, delta: f64, e_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let (q, d) = source(family, points)?;
    let cfg = config();
    let mut out = Vec::with_capacity(2 * samples);
    for e in spaced(0.0, e_max, samples)? {
        let problem = InverseProblem::new(q.clone(), d.clone(), e, delta).map_err(|e| e.to_string())?;
        let report = solve_inverse(&problem, &cfg).map_err(|e| e.to_string())?;
        out.extend([e, report.value]);
    }
    Ok(out)
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rd_curve(family: &str, points: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    js(rate_distortion(family, points, samples))
}

#[wasm_bindgen]
pub fn exponent_curve(family: &str, points: usize, delta: f64, from: f64, to: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    js(exponents(family, points, delta, from, to, samples))
}

#[wasm_bindgen]
pub fn inverse_curve(family: &str, points: usize, delta: f64, e_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    js(inverses(family, points, delta, e_max, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_distortion_decreases_to_zero() {
        let v = rate_distortion("gaussian", 30, 8).unwrap();
        let rates: Vec<f64> = v.chunks(2).map(|c| c[1]).collect();
        assert!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert_eq!(rates[7], 0.0);
    }

    #[test]
    fn curves_are_monotone() {
        let e = exponents("laplacian", 20, 0.4, 0.5, 1.2, 5).unwrap();
        let vals: Vec<f64> = e.chunks(2).map(|c| c[1]).collect();
        assert_eq!(vals[0], 0.0);
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{vals:?}");
        let r = inverses("gaussian", 20, 0.4, 0.3, 4).unwrap();
        let vals: Vec<f64> = r.chunks(2).map(|c| c[1]).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{vals:?}");
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(rate_distortion("cauchy", 30, 8).is_err());
        assert!(exponents("gaussian", 30, 0.4, 0.9, 0.5, 4).is_err());
        assert!(inverses("gaussian", 30, 0.4, 0.2, 1).is_err());
    }
}
