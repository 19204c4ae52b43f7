//! Invariants of the built-in problem corpus, checked against brute force.

mod common;

use nsdm::problems::l2_target;
use nsdm::verify::{check_prox_regularity, check_subdiff_lipschitz, SamplingPlan};
use nsdm::{default_corpus, run_nsdm, ProblemSpec, SelectionRule, SolverConfig, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn corpus() -> Vec<ProblemSpec> {
    default_corpus().unwrap()
}

/// Minimizer found without the solver: brute force in low dimension, the
/// sampled target for the l2 family.
fn reference_minimizer(spec: &ProblemSpec) -> Vec<f64> {
    let o = &spec.oracle;
    match o.dim() {
        1 => vec![common::brute_min_1d(|t| o.value(&[t]), -4.0, 4.0, 8000)],
        2 => common::brute_min_2d(|a, b| o.value(&[a, b]), -3.0, 3.0, 1e-2).to_vec(),
        10 => l2_target(10, 7).unwrap().into_inner(),
        d => panic!("no reference for dimension {d}"),
    }
}

#[test]
fn declared_minima_match_brute_force() {
    let mut checked = 0;
    for spec in corpus() {
        let Some((x_star, f_star)) = spec.expected() else {
            continue;
        };
        let reference = reference_minimizer(&spec);
        let d = common::dist(x_star.as_slice(), &reference);
        assert!(
            d <= 1e-5,
            "{}: declared {:?}, brute force {:?}",
            spec.id,
            x_star,
            reference
        );
        let f = spec.oracle.eval(x_star).unwrap();
        assert!(
            (f - f_star).abs() <= 1e-12 * (1.0 + f_star.abs()),
            "{}: f(x*) = {f}, declared {f_star}",
            spec.id
        );
        assert!(
            spec.oracle.value(&reference) >= f_star - 1e-12,
            "{}: brute force beats the declared minimum",
            spec.id
        );
        let g = spec
            .oracle
            .subgradient(x_star, SelectionRule::MinNorm)
            .unwrap();
        assert!(g.norm() <= 1e-10, "{}: |v(x*)| = {:e}", spec.id, g.norm());
        checked += 1;
    }
    assert_eq!(checked, corpus().len());
}

#[test]
fn l1_minimizers_are_soft_thresholds() {
    for spec in corpus().into_iter().filter(|s| s.id.starts_with("l1_")) {
        let (x_star, _) = spec.expected().unwrap();
        let (lambda, b) = match spec.id.as_str() {
            "l1_shrink" => (1.0, vec![2.0]),
            "l1_zero" => (1.0, vec![0.5]),
            "l1_pair" => (0.5, vec![2.0, -2.0]),
            other => panic!("unexpected l1 entry {other}"),
        };
        let d = vec![1.0; b.len()];
        assert_eq!(
            x_star.as_slice(),
            common::soft_threshold(lambda, &d, &b).as_slice(),
            "{}",
            spec.id
        );
    }
}

/// Draws points at distance in `(R, 2R]` from the declared center and checks
/// that none of them lies in the level set.
fn assert_ball_contains_level_set(spec: &ProblemSpec, seed: u64) {
    let ball = spec.level_set.as_ref().unwrap();
    let f0 = spec.oracle.eval(&spec.x0).unwrap();
    assert!(
        ball.center.distance(&spec.x0).unwrap() <= ball.radius,
        "{}: x0 outside its ball",
        spec.id
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let g: Vec<f64> = (0..spec.oracle.dim())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let n = common::norm(&g);
        let r = ball.radius * (1.0 + rng.random::<f64>()).max(1.0 + 1e-9);
        let y: Vec<f64> = ball
            .center
            .iter()
            .zip(&g)
            .map(|(c, gi)| c + r * gi / n)
            .collect();
        assert!(
            spec.oracle.value(&y) > f0,
            "{}: level-set point {:?} outside radius {}",
            spec.id,
            y,
            ball.radius
        );
    }
}

#[test]
fn level_set_balls_contain_the_level_set() {
    let mut checked = 0;
    for spec in corpus().into_iter().filter(|s| s.level_set.is_some()) {
        assert_ball_contains_level_set(&spec, 1);
        for seed in 0..5 {
            assert_ball_contains_level_set(&spec.with_random_start(seed).unwrap(), 100 + seed);
        }
        checked += 1;
    }
    assert!(
        checked >= 9,
        "only {checked} entries declare a level-set ball"
    );
}

#[test]
fn convex_entries_are_prox_regular_for_tiny_l() {
    for spec in corpus().into_iter().filter(|s| s.is_convex()) {
        let plan = SamplingPlan::new(spec.x0.clone(), 1.0, 500, 3).unwrap();
        let cert = check_prox_regularity(&spec.oracle, 1e-6, &plan).unwrap();
        assert!(cert.passed, "{}: {:?}", spec.id, cert.violations.first());
    }
}

#[test]
fn declared_lipschitz_constants_hold_and_kinks_have_none() {
    for spec in corpus().into_iter().filter(|s| s.is_convex()) {
        let (x_star, _) = spec.expected().unwrap();
        let plan = SamplingPlan::new(x_star.clone(), 1.0, 2000, 11).unwrap();
        match spec.lipschitz() {
            Some(l) => {
                let omega = vec![spec.x0.clone(), x_star.clone()];
                let cert = check_subdiff_lipschitz(&spec.oracle, &omega, l, &plan).unwrap();
                assert!(cert.passed, "{}: declared L = {l} refuted", spec.id);
            }
            None => {
                // a kink of the objective: the origin for l1 terms, the
                // minimizer for max-affine ones
                let kink = if spec.id.starts_with("l1_") {
                    Vector::zeros(spec.oracle.dim()).unwrap()
                } else {
                    x_star.clone()
                };
                let cert = check_subdiff_lipschitz(&spec.oracle, &[kink], 2.0, &plan).unwrap();
                assert!(!cert.passed, "{}: no witness against L = 2", spec.id);
                assert!(!cert.violations[0].witness.is_empty());
            }
        }
    }
}

#[test]
fn solver_reaches_declared_minima_from_random_starts() {
    let cfg = SolverConfig::default();
    for spec in corpus() {
        let (_, f_star) = spec.expected().unwrap();
        for seed in [None, Some(0), Some(1), Some(2)] {
            let s = match seed {
                Some(seed) => spec.with_random_start(seed).unwrap(),
                None => spec.clone(),
            };
            let trace = run_nsdm(&s.oracle, &s.x0, &cfg).unwrap();
            assert!(
                trace.termination.is_converged(),
                "{} seed {seed:?}: {:?}",
                s.id,
                trace.termination
            );
            let gap = trace.final_f() - f_star;
            assert!(
                gap <= 1e-6 * (1.0 + f_star.abs()),
                "{} seed {seed:?}: f - f* = {gap:e}",
                s.id
            );
        }
    }
}
