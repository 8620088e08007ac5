//! End-to-end checks of the line-search solvers against oracles, closed forms and each other.

mod common;

use amcd::baselines::{
    bench_inverse, gaussian_closed_form_check, grid_baseline_inverse, oracle_exponent, oracle_inverse,
    SimplexGridSpec,
};
use amcd::exponent::solve_exponent_lumped;
use amcd::inverse::solve_inverse_lumped;
use amcd::sources::ahlswede::{ahlswede_build, AhlswedeSpec};
use amcd::{
    rd_at_distortion, solve_exponent, solve_inverse, DistortionMatrix, ExponentProblem, InverseProblem,
    ProbabilityVector, SolveStatus, SolverConfig, ZetaGrid,
};
use common::{gaussian_source, random_instance, wide_config};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_instances_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = wide_config();
    for m in [2, 3, 2] {
        let inst = random_instance(&mut rng, m);
        let inverse = InverseProblem::new(inst.q.clone(), inst.d.clone(), 0.08, inst.delta).unwrap();
        let got = solve_inverse(&inverse, &cfg).unwrap().value;
        let want = oracle_inverse(&inverse, &SimplexGridSpec::default()).unwrap();
        assert!((got - want).abs() <= 1e-3, "inverse {got} vs {want}");

        let rate = 0.5 * (inst.source_rate + inst.max_rate);
        let exponent = ExponentProblem::new(inst.q, inst.d, rate, inst.delta).unwrap();
        let got = solve_exponent(&exponent, &cfg).unwrap().value;
        let want = oracle_exponent(&exponent, &SimplexGridSpec::default()).unwrap();
        assert!((got - want).abs() <= 1e-3, "exponent {got} vs {want}");
    }
}

#[test]
fn lumped_solvers_reproduce_full_solvers() {
    let spec = AhlswedeSpec {
        size_a: 2,
        size_b: 8,
        xi: 0.2,
        ..AhlswedeSpec::standard()
    };
    let inst = ahlswede_build(&spec).unwrap();
    let lumping = inst.lumping().unwrap();
    let cfg = SolverConfig {
        zeta_grid: ZetaGrid::uniform(60, 30.0),
        ..SolverConfig::default()
    };
    let delta = 0.2;
    let source_rate = rd_at_distortion(&inst.q, &inst.d, delta, 1e-11).unwrap().0;

    let inverse = InverseProblem::new(inst.q.clone(), inst.d.clone(), 0.1, delta).unwrap();
    let full = solve_inverse(&inverse, &cfg).unwrap();
    let lumped = solve_inverse_lumped(&inverse, &lumping, &cfg).unwrap();
    assert!((full.value - lumped.value).abs() < 1e-6, "{} vs {}", full.value, lumped.value);
    assert!(full.value > source_rate + 0.01);

    let rate = 0.5 * (source_rate + full.value);
    let exponent = ExponentProblem::new(inst.q, inst.d, rate, delta).unwrap();
    let full = solve_exponent(&exponent, &cfg).unwrap();
    let lumped = solve_exponent_lumped(&exponent, &lumping, &cfg).unwrap();
    assert!((full.value - lumped.value).abs() < 1e-6, "{} vs {}", full.value, lumped.value);
    let (pf, pl) = (full.p_star.unwrap(), lumped.p_star.unwrap());
    assert!(pf.l1_distance(&pl) < 1e-5);
}

#[test]
fn exponent_inverts_the_inverse_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = wide_config();
    let inst = random_instance(&mut rng, 3);
    for radius in [0.03, 0.1, 0.25] {
        let inverse = InverseProblem::new(inst.q.clone(), inst.d.clone(), radius, inst.delta).unwrap();
        let rate = solve_inverse(&inverse, &cfg).unwrap().value;
        // At the largest rate the exponent's feasible set is a single point.
        if rate <= inst.source_rate + 1e-6 || rate >= inst.max_rate - 1e-3 {
            continue;
        }
        let exponent = ExponentProblem::new(inst.q.clone(), inst.d.clone(), rate - 1e-7, inst.delta).unwrap();
        let back = solve_exponent(&exponent, &cfg).unwrap().value;
        assert!(back <= radius + 5e-3, "radius {radius}: round trip gave {back}");
    }
}

#[test]
fn discretized_gaussian_tracks_the_gaussian_family_bound() {
    let (q, d) = gaussian_source();
    let problem = InverseProblem::new(q, d, 0.1, 0.4).unwrap();
    let got = solve_inverse(&problem, &SolverConfig::default()).unwrap().value;
    let family = gaussian_closed_form_check(1.0, 0.4, 0.1).unwrap();
    assert!((got - family).abs() < 0.02, "{got} vs {family}");
}

#[test]
fn grid_baseline_never_beats_the_line_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let inst = random_instance(&mut rng, 3);
    let cfg = wide_config();
    let problem = InverseProblem::new(inst.q, inst.d, 0.1, inst.delta).unwrap();
    let best = solve_inverse(&problem, &cfg).unwrap();
    let zetas: Vec<f64> = (1..=40).map(|k| best.zeta_star * k as f64 / 20.0).collect();
    let xis: Vec<f64> = (0..40).map(|k| 0.01 * 1.25f64.powi(k)).collect();
    let grid = grid_baseline_inverse(&problem, &zetas, &xis, &cfg).unwrap();
    assert!(grid.kept > 0);
    assert!(grid.value <= best.value + 1e-4, "{} vs {}", grid.value, best.value);
    assert!(grid.value >= best.value - 0.05, "{} vs {}", grid.value, best.value);
}

#[test]
fn coarse_grid_is_dominated_on_the_gaussian_source() {
    let (q, d) = gaussian_source();
    let problem = InverseProblem::new(q, d, 0.1, 0.4).unwrap();
    let cfg = SolverConfig::default();
    let line = solve_inverse(&problem, &cfg).unwrap().value;
    let coarse: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let grid = grid_baseline_inverse(&problem, &coarse, &coarse, &cfg).unwrap();
    assert!(grid.value <= line + 1e-6, "{} vs {line}", grid.value);
}

#[test]
fn bench_reports_medians() {
    let q = ProbabilityVector::new(vec![0.3, 0.7]).unwrap();
    let d = DistortionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let problem = InverseProblem::new(q, d, 0.05, 0.1).unwrap();
    let cfg = SolverConfig {
        zeta_grid: ZetaGrid::uniform(10, 5.0),
        ..SolverConfig::default()
    };
    let (zetas, xis) = ([1.0, 2.0], [0.5, 1.0, 2.0]);
    let s = bench_inverse(&problem, &zetas, &xis, &cfg, 3).unwrap();
    assert_eq!((s.repeats, s.grid_size), (3, (2, 3)));
    assert!(s.amcd_time_s > 0.0 && s.grid_time_s > 0.0);
    assert!((s.speedup - s.grid_time_s / s.amcd_time_s).abs() < 1e-12);
    assert!((s.value_gap - (s.amcd_value - s.grid_value)).abs() < 1e-15);
    assert!(bench_inverse(&problem, &zetas, &xis, &cfg, 0).is_err());
}

fn binary_problem(q0: f64, cross: f64, delta_frac: f64) -> (ProbabilityVector, DistortionMatrix, f64) {
    let q = ProbabilityVector::new(vec![q0, 1.0 - q0]).unwrap();
    let d = DistortionMatrix::from_rows(&[vec![0.0, 1.0], vec![cross, 0.0]]).unwrap();
    let dmax = amcd::delta_max(&q, &d).unwrap();
    (q, d, delta_frac * dmax)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inverse_grows_with_radius(q0 in 0.1f64..0.9, cross in 0.2f64..1.0, frac in 0.2f64..0.8) {
        let (q, d, delta) = binary_problem(q0, cross, frac);
        let cfg = wide_config();
        let source_rate = rd_at_distortion(&q, &d, delta, 1e-11).unwrap().0;
        let mut prev = source_rate - 1e-6;
        for radius in [0.0, 0.02, 0.08, 0.2] {
            let v = solve_inverse(&InverseProblem::new(q.clone(), d.clone(), radius, delta).unwrap(), &cfg)
                .unwrap()
                .value;
            prop_assert!(v >= prev - 1e-6, "radius {}: {} < {}", radius, v, prev);
            prop_assert!(v <= 2f64.ln() + 1e-9);
            prev = v;
        }
    }

    #[test]
    fn exponent_is_zero_below_source_rate_and_grows_above(
        q0 in 0.1f64..0.9, cross in 0.2f64..1.0, frac in 0.2f64..0.8,
    ) {
        let (q, d, delta) = binary_problem(q0, cross, frac);
        let cfg = wide_config();
        let source_rate = rd_at_distortion(&q, &d, delta, 1e-11).unwrap().0;
        if source_rate > 1e-3 {
            let r = solve_exponent(&ExponentProblem::new(q.clone(), d.clone(), 0.5 * source_rate, delta).unwrap(), &cfg)
                .unwrap();
            prop_assert_eq!(r.status, SolveStatus::SourceFeasible);
            prop_assert_eq!(r.value, 0.0);
        }
        let mut prev = 0.0;
        for step in [0.01, 0.03, 0.06] {
            let r = solve_exponent(
                &ExponentProblem::new(q.clone(), d.clone(), source_rate + step, delta).unwrap(),
                &cfg,
            )
            .unwrap();
            prop_assert!(r.value >= prev - 1e-6, "{} < {}", r.value, prev);
            prev = r.value;
        }
    }
}
