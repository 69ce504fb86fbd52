mod common;

use bethe_gibbs::animals::EnumerationLimits;
use bethe_gibbs::contour::{configuration_sum, contour_family_sum, count_connected_subgraphs, extract_contours, reconstruct};
use bethe_gibbs::dsets::{gen_dimer_cover, gen_random_sparse, CoverKind, DRecipe};
use bethe_gibbs::gibbs::{depth_scan, exact_marginals, log_partition, GibbsParams};
use bethe_gibbs::groundstate::{build_sigma, flip_connected, recover_d, Coupling, Sign};
use bethe_gibbs::tree::{build_ball, TreeSpec, VertexId};
use common::{enumerate, rel_err, rooted_subtree_count, uniform_plus_root_magnetization};
use proptest::prelude::*;

fn params(beta: f64, relative: bool) -> GibbsParams {
    GibbsParams::new(beta, Coupling::new(1.0).unwrap(), relative).unwrap()
}

#[test]
fn closed_form_subtree_counts() {
    assert_eq!(rooted_subtree_count(2, 1), 3);
    assert_eq!(rooted_subtree_count(2, 2), 9);
    for (k, n_max) in [(2u32, 6u32), (3, 4), (4, 3)] {
        let t = build_ball(TreeSpec::new(k, n_max + 1)).unwrap();
        for n in 0..=n_max {
            let count = count_connected_subgraphs(&t, VertexId::ROOT, n, EnumerationLimits::default()).unwrap();
            assert_eq!(u128::from(count), rooted_subtree_count(u64::from(k), u64::from(n)), "k={k} n={n}");
        }
    }
}

#[test]
fn uniform_boundary_matches_scalar_recursion() {
    for k in [2u32, 3, 5] {
        for beta in [0.1, 0.4, 1.5] {
            let depths: Vec<u32> = (1..=6).collect();
            let scan = depth_scan(k, &DRecipe::new(CoverKind::Empty, 0), Sign::Plus, &params(beta, true), &depths).unwrap();
            for row in &scan.rows {
                let expect = uniform_plus_root_magnetization(k, row.depth, beta);
                assert!((row.root_magnetization - expect).abs() < 1e-12, "k={k} beta={beta} r={}", row.depth);
            }
        }
    }
}

#[test]
fn contour_families_match_configurations_on_random_sets() {
    let t = build_ball(TreeSpec::new(2, 3)).unwrap();
    for seed in 0..5 {
        let d = gen_random_sparse(&t, 1, 0.5, seed).unwrap();
        for beta in [0.2, 1.1] {
            let j = Coupling::new(0.7).unwrap();
            let direct = configuration_sum(&t, &d, j, beta).unwrap();
            let families = contour_family_sum(&t, &d, j, beta, EnumerationLimits::default()).unwrap();
            assert!(rel_err(direct, families) < 1e-10, "seed={seed} beta={beta}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recursion_matches_enumeration(
        shape in prop::sample::select(vec![(2u32, 2u32), (2, 3), (3, 2), (4, 2), (3, 3)]),
        seed in 0u64..1000,
        beta in 0.05f64..3.0,
        plus in any::<bool>(),
        relative in any::<bool>(),
    ) {
        let t = build_ball(TreeSpec::new(shape.0, shape.1)).unwrap();
        let d = gen_random_sparse(&t, 2, 0.4, seed).unwrap();
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let p = params(beta, relative);
        let oracle = enumerate(&t, &d, sign, beta, relative);
        let log_z = log_partition(&t, &d, sign, &p).unwrap();
        prop_assert!(rel_err(log_z, oracle.log_z) < 1e-10 || (log_z - oracle.log_z).abs() < 1e-12);
        let m = exact_marginals(&t, &d, sign, &p).unwrap();
        for (a, b) in m.iter().zip(&oracle.magnetization) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn edge_set_round_trips_through_configuration(k in 1u32..6, r in 0u32..5, seed in any::<u64>(), plus in any::<bool>()) {
        let t = build_ball(TreeSpec::new(k, r)).unwrap();
        let d = gen_random_sparse(&t, k + 1, 0.5, seed).unwrap();
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let sigma = build_sigma(&t, &d, sign).unwrap();
        prop_assert_eq!(sigma.spin(VertexId::ROOT), sign.value());
        let back = recover_d(&t, &sigma).unwrap();
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), d.edges().collect::<Vec<_>>());
        prop_assert_eq!(build_sigma(&t, &d, sign.flipped()).unwrap(), sigma.negated());
    }

    #[test]
    fn flip_covariance(seed in 0u64..500, beta in 0.01f64..4.0, relative in any::<bool>()) {
        let t = build_ball(TreeSpec::new(3, 4)).unwrap();
        let d = gen_dimer_cover(&t, seed);
        let p = params(beta, relative);
        let plus = exact_marginals(&t, &d, Sign::Plus, &p).unwrap();
        let minus = exact_marginals(&t, &d, Sign::Minus, &p).unwrap();
        for (a, b) in plus.iter().zip(&minus) {
            prop_assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn contours_reconstruct_configuration(seed in 0u64..500, mask in any::<u32>()) {
        let t = build_ball(TreeSpec::new(3, 3)).unwrap();
        let d = gen_dimer_cover(&t, seed);
        let reference = build_sigma(&t, &d, Sign::Plus).unwrap();
        let mut sigma = reference.clone();
        for i in 0..t.interior_count().min(32) {
            if mask >> i & 1 == 1 {
                sigma = flip_connected(&t, &sigma, &[VertexId::new(i as u32)]).unwrap();
            }
        }
        let contours = extract_contours(&t, &sigma, &reference).unwrap();
        prop_assert_eq!(reconstruct(&t, &reference, &contours).unwrap(), sigma);
    }
}
