mod common;

use aosi_core::closed_form::StationaryCase;
use aosi_core::optimizer::DEFAULT_N_MAX;
use aosi_core::solver::check_switching_signs;
use aosi_core::{
    brute_force_stationary, extract_thresholds, objective_f, optimize_descent, optimize_exhaustive, rvi_solve,
    simulate, stationary, Action, ModelParams, RawParams, SimConfig, SolverConfig, ThresholdPolicy,
};
use common::{linf, random_params, random_policy, rng, z_score};
use rayon::prelude::*;

fn reference(l1: f64, l2: f64) -> ModelParams {
    ModelParams::new(RawParams::reference(0.0, 0.0)).unwrap().with_energies(l1, l2).unwrap()
}

#[test]
fn switching_point_action_orderings_hold() {
    let mut rng = rng(11);
    let cases: Vec<ModelParams> = (0..60).map(|_| random_params(&mut rng)).collect();
    cases.par_iter().for_each(|params| {
        let res = rvi_solve(params, &SolverConfig::default()).unwrap();
        let n = extract_thresholds(&res).unwrap();
        let violations = check_switching_signs(params, &res, n);
        assert!(violations.is_empty(), "{:?} {n}: {violations:?}", params.raw());
    });
}

#[test]
fn gain_is_insensitive_to_truncation() {
    let cells: Vec<(f64, f64)> = [0.0, 3.0, 6.0, 9.0].iter().flat_map(|&a| [0.0, 4.0, 9.0].map(|b| (a, b))).collect();
    cells.par_iter().for_each(|&(l1, l2)| {
        let params = reference(l1, l2);
        let small = rvi_solve(&params, &SolverConfig { s_max: 2000, ..SolverConfig::default() }).unwrap();
        let large = rvi_solve(&params, &SolverConfig { s_max: 4000, ..SolverConfig::default() }).unwrap();
        assert!((small.theta - large.theta).abs() <= 1e-8, "({l1}, {l2})");
    });
}

#[test]
fn cheap_uncompressed_makes_compression_useless() {
    let mut rng = rng(12);
    for _ in 0..40 {
        let base = random_params(&mut rng);
        let l2 = base.lambda1() * 0.5;
        let params = base.with_energies(base.lambda1(), l2).unwrap();
        let opt = optimize_exhaustive(&params, 400).unwrap();
        let diagonal = (0..=400)
            .map(|k| objective_f(&params, ThresholdPolicy::finite(k, k)))
            .chain([objective_f(&params, ThresholdPolicy::never_transmit())])
            .fold(f64::INFINITY, f64::min);
        assert!(diagonal - opt.f_value <= 1e-9, "{:?}", params.raw());

        let res = rvi_solve(&params, &SolverConfig { s_max: 600, ..SolverConfig::default() }).unwrap();
        assert!(res.policy.iter().all(|&a| a != Action::Compressed), "{:?}", params.raw());
    }
}

#[test]
fn exhaustive_never_loses_to_descent() {
    let mut rng = rng(13);
    for _ in 0..40 {
        let params = random_params(&mut rng);
        let Ok(best) = optimize_exhaustive(&params, DEFAULT_N_MAX) else { continue };
        for init in [ThresholdPolicy::finite(0, 0), ThresholdPolicy::finite(30, 60)] {
            if let Ok(local) = optimize_descent(&params, init, DEFAULT_N_MAX) {
                assert!(best.f_value <= local.f_value, "{:?} from {init}", params.raw());
            }
        }
    }
}

#[test]
fn compressed_segment_starting_at_one_matches_balance_solve() {
    let mut rng = rng(14);
    for _ in 0..30 {
        let params = random_params(&mut rng);
        let n2 = 1 + random_policy(&mut rng, 15).n2().finite().unwrap();
        let n = ThresholdPolicy::finite(1, n2);
        assert_eq!(stationary(&params, n).case, StationaryCase::BothPositive);
        let brute = brute_force_stationary(&params, n, n2 + 800).unwrap();
        assert!(linf(&stationary(&params, n).to_vec(n2 + 800), &brute) <= 1e-10);
    }
}

#[test]
fn truncated_mass_is_essentially_one() {
    let mut rng = rng(15);
    for _ in 0..100 {
        let params = random_params(&mut rng);
        let n = random_policy(&mut rng, 30);
        let c = params.constants().c;
        let cap = (10.0 * (n.n2().finite().unwrap() as f64 + 1.0 / (1.0 - c))).ceil() as usize;
        let mass: f64 = stationary(&params, n).to_vec(cap).iter().sum();
        assert!(mass >= 1.0 - 1e-9, "{:?} {n}: {mass}", params.raw());
    }
}

#[test]
fn visit_frequencies_converge_to_stationary_law() {
    let horizon = 10_000_000u64;
    let bound = 5.0 / (horizon as f64).sqrt();
    let cases = [
        (1.0, 2.0, ThresholdPolicy::finite(2, 5)),
        (1.0, 2.0, ThresholdPolicy::finite(0, 0)),
        (6.0, 4.0, ThresholdPolicy::finite(7, 7)),
    ];
    cases.par_iter().enumerate().for_each(|(k, &(l1, l2, n))| {
        let params = reference(l1, l2);
        let est = simulate(&params, n, &SimConfig::new(horizon, 0x5EED_0900 + k as u64)).unwrap();
        let cap = 1000;
        let brute = brute_force_stationary(&params, n, cap).unwrap();
        let freq = est.visit_frequencies(cap);
        let l1_dist: f64 = freq.iter().zip(&brute).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1_dist <= bound, "{n}: L1 {l1_dist} > {bound}");
    });
}

#[test]
fn objective_matches_simulated_cost_on_sampled_pairs() {
    let params = reference(1.0, 2.0);
    let pairs = [(0, 0), (0, 7), (2, 5), (3, 3), (5, 20), (10, 50)];
    pairs.par_iter().enumerate().for_each(|(k, &(n1, n2))| {
        let n = ThresholdPolicy::finite(n1, n2);
        let est = simulate(&params, n, &SimConfig::new(10_000_000, 300 + k as u64)).unwrap();
        let z = z_score(objective_f(&params, n), est.avg_cost, est.avg_cost_se);
        assert!(z <= 3.0, "{n}: {z} SE");
    });
}

#[test]
fn pinned_source_stays_at_zero() {
    let params = ModelParams::new(RawParams { r0: 1.0, ..RawParams::reference(1.0, 2.0) }).unwrap();
    let n = ThresholdPolicy::finite(2, 3);
    let est = simulate(&params, n, &SimConfig::new(100_000, 1)).unwrap();
    assert_eq!(est.avg_aosi, 0.0);
    assert_eq!(est.frac_uncompressed, 0.0);
    assert_eq!(est.frac_compressed, 0.0);
}
