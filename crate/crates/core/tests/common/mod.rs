//! Instance generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use amcd::sources::{grid_source, DiscretizationSpec, DistortionKind};
use amcd::{
    delta_max, rd_at_distortion, solve_inverse, DistortionMatrix, InverseProblem, ProbabilityVector,
    SolverConfig, ZetaGrid,
};
use rand::Rng;

/// Geometric slopes from 0.02 to 200 with golden-section refinement.
///
/// Random small matrices put the optimal slope anywhere in that range.
pub fn wide_config() -> SolverConfig {
    let zetas = (0..100).map(|k| 0.02 * 1e4f64.powf(k as f64 / 99.0)).collect();
    SolverConfig {
        zeta_grid: ZetaGrid::Explicit(zetas),
        refine_zeta: true,
        ..SolverConfig::default()
    }
}

/// A random `m × m` problem with an interior distortion threshold.
pub struct RandomInstance {
    pub q: ProbabilityVector,
    pub d: DistortionMatrix,
    pub delta: f64,
    /// `R(Δ, q)`.
    pub source_rate: f64,
    /// Largest `R(Δ, p)` over the simplex.
    pub max_rate: f64,
}

/// `q` has entries at least 0.05. Each row of `d` is uniform on `[0, 1]` shifted so its
/// smallest entry is zero, which keeps `R(Δ, p)` finite for every `p` and `Δ ≥ 0`.
/// `Δ` is drawn from `[0.2, 0.8] · Δ_max(q)`. Draws with `Δ_max(q) < 0.05` or
/// with less than 0.01 nats between `R(Δ, q)` and the largest rate are redrawn.
pub fn random_instance(rng: &mut impl Rng, m: usize) -> RandomInstance {
    loop {
        let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let q = ProbabilityVector::new(
            raw.iter()
                .map(|v| 0.05 + (1.0 - 0.05 * m as f64) * v / total)
                .collect(),
        )
        .unwrap();
        let mut entries: Vec<f64> = (0..m * m).map(|_| rng.gen::<f64>()).collect();
        for row in entries.chunks_mut(m) {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter_mut().for_each(|v| *v -= min);
        }
        let d = DistortionMatrix::new(m, m, entries).unwrap();
        let dmax = delta_max(&q, &d).unwrap();
        if dmax < 0.05 {
            continue;
        }
        let delta = dmax * rng.gen_range(0.2..0.8);
        let source_rate = rd_at_distortion(&q, &d, delta, 1e-11).unwrap().0;
        // A radius past ln(1 / min q) admits every distribution.
        let whole = InverseProblem::new(q.clone(), d.clone(), 1.0 + (1.0f64 / 0.05).ln(), delta).unwrap();
        let max_rate = solve_inverse(&whole, &wide_config()).unwrap().value;
        if max_rate - source_rate < 0.01 {
            continue;
        }
        return RandomInstance {
            q,
            d,
            delta,
            source_rate,
            max_rate,
        };
    }
}

/// Gaussian(0, 1) on 100 points of `[-5, 5]` under squared error.
pub fn gaussian_source() -> (ProbabilityVector, DistortionMatrix) {
    let (_, q, d) = grid_source(&DiscretizationSpec::gaussian(0.0, 1.0, 5.0, 100), DistortionKind::Squared).unwrap();
    (q, d)
}

/// Laplacian(b = 1) on 100 points of `[-5, 5]` under absolute error.
pub fn laplacian_source() -> (ProbabilityVector, DistortionMatrix) {
    let (_, q, d) = grid_source(&DiscretizationSpec::laplacian(1.0, 5.0, 100), DistortionKind::Absolute).unwrap();
    (q, d)
}
