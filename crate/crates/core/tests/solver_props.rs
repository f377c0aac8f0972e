mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use resilimat::bounds::{bound_submodular_matroid, greedy_factor};
use resilimat::exact_oracles::{best_extension, greedy_nonresilient, optimal_resilient, worst_case_removal};
use resilimat::matroid::IndependenceOracle;
use resilimat::setfn::{curvature_kappa, make_modular};
use resilimat::solver::{evaluation_budget, solve_resilient_with, GreedyMode};
use resilimat::{solve_resilient, Matroid, OracleOptions, Subset};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_is_feasible_and_split(seed in any::<u64>(), n in 4usize..=9, alpha in 2usize..=4, partition in any::<bool>()) {
        let mut rng = rng(seed);
        let alpha = alpha.min(n);
        let beta = rng.random_range(0..alpha);
        let f = random_submodular(&mut rng, n, seed as usize);
        let (sel, rem) = if partition {
            random_partition_pair(&mut rng, n, alpha, beta)
        } else {
            (Matroid::uniform(n, alpha), Matroid::uniform(n, beta))
        };
        let out = solve_resilient(&f, &sel, &rem).unwrap();
        prop_assert!(sel.is_independent(&out.a));
        prop_assert!(rem.is_independent(&out.a1));
        prop_assert!(out.a1.is_disjoint(&out.a2));
        prop_assert_eq!(out.a.clone(), out.a1.union(&out.a2));
        prop_assert_eq!(out.a.len(), alpha);
        prop_assert!(out.eval_count <= evaluation_budget(n));
        prop_assert!(out.warnings.is_empty());
    }

    #[test]
    fn lazy_mode_agrees_on_submodular_objectives(seed in any::<u64>(), n in 4usize..=9, alpha in 2usize..=4) {
        let mut rng = rng(seed);
        let beta = rng.random_range(0..alpha);
        let f = random_submodular(&mut rng, n, seed as usize);
        let (sel, rem) = (Matroid::uniform(n, alpha), Matroid::uniform(n, beta));
        let full = solve_resilient_with(&f, &sel, &rem, GreedyMode::Full).unwrap();
        let lazy = solve_resilient_with(&f, &sel, &rem, GreedyMode::LazyAssumeSubmodular).unwrap();
        let opts = OracleOptions::default();
        let vf = worst_case_removal(&f, &full.a, &rem, &opts).unwrap().value;
        let vl = worst_case_removal(&f, &lazy.a, &rem, &opts).unwrap().value;
        prop_assert!((vf - vl).abs() < 1e-9 || full.a == lazy.a);
    }

    /// Greedy over the bait-restricted matroid keeps the classical factor.
    #[test]
    fn greedy_on_restriction_keeps_its_factor(seed in any::<u64>(), n in 5usize..=8, alpha in 2usize..=4, partition in any::<bool>()) {
        let mut rng = rng(seed);
        let beta = rng.random_range(0..alpha);
        let f = random_submodular(&mut rng, n, seed as usize);
        let kappa = curvature_kappa(&f).unwrap().value;
        let (sel, rem) = if partition {
            random_partition_pair(&mut rng, n, alpha, beta)
        } else {
            (Matroid::uniform(n, alpha), Matroid::uniform(n, beta))
        };
        let out = solve_resilient(&f, &sel, &rem).unwrap();
        let best = best_extension(&f, &sel, &out.a1).unwrap().value;
        let got = f.evaluate(&out.a2).unwrap();
        let factor = if partition { 1.0 / (1.0 + kappa) } else { greedy_factor(kappa) };
        prop_assert!(got >= factor * best - 1e-9, "{} < {} * {}", got, factor, best);
    }

    /// The worst removal of a selection never beats its value with nothing removed.
    #[test]
    fn removal_never_helps(seed in any::<u64>(), n in 4usize..=8, alpha in 2usize..=4) {
        let mut rng = rng(seed);
        let beta = rng.random_range(0..=alpha);
        let f = random_submodular(&mut rng, n, seed as usize);
        let (sel, rem) = (Matroid::uniform(n, alpha), Matroid::uniform(n, beta));
        let opt = optimal_resilient(&f, &sel, &rem, &OracleOptions::default()).unwrap();
        let a = opt.argset.clone();
        let removal = opt.removal.unwrap();
        prop_assert!(rem.is_independent(&removal) && removal.is_subset(&a));
        prop_assert!(opt.value <= f.evaluate(&a).unwrap() + 1e-12);
        prop_assert_eq!(opt.value, f.evaluate(&a.difference(&removal)).unwrap());
    }

    #[test]
    fn bound_is_a_fraction(alpha in 1usize..40, beta in 0usize..40, kappa in 0.0f64..=1.0) {
        prop_assume!(beta <= alpha);
        let b = bound_submodular_matroid(kappa, alpha, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
    }
}

#[test]
fn modular_example_is_optimal() {
    let f = make_modular(vec![5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
    let (sel, rem) = (Matroid::uniform(5, 3), Matroid::uniform(5, 1));
    let out = solve_resilient(&f, &sel, &rem).unwrap();
    assert_eq!(out.a1, Subset::from_ids(5, [0]).unwrap());
    assert_eq!(out.a2, Subset::from_ids(5, [1, 2]).unwrap());
    let opts = OracleOptions::default();
    let got = worst_case_removal(&f, &out.a, &rem, &opts).unwrap().value;
    let best = optimal_resilient(&f, &sel, &rem, &opts).unwrap().value;
    assert_eq!(got, 7.0);
    assert_eq!(best, 7.0);
}

#[test]
fn beta_zero_matches_classical_greedy() {
    let mut rng = rng(42);
    for k in 0..20 {
        let f = random_submodular(&mut rng, 8, k);
        let sel = Matroid::uniform(8, 3);
        let out = solve_resilient(&f, &sel, &Matroid::uniform(8, 0)).unwrap();
        assert!(out.a1.is_empty());
        assert_eq!(out.a, greedy_nonresilient(&f, &sel).unwrap());
    }
}

#[test]
fn unsupported_removal_matroid_warns() {
    let mut rng = rng(3);
    let f = random_coverage(&mut rng, 6);
    let rem = Matroid::transversal(6, vec![vec![0, 1], vec![2, 3]]).unwrap();
    let out = solve_resilient(&f, &Matroid::uniform(6, 3), &rem).unwrap();
    assert_eq!(out.warnings.len(), 1);
    assert!(rem.is_independent(&out.a1));
}
