mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vessel_centerline::geometry::Voxel;
use vessel_centerline::grouping::{gag_distance, knn_graph, Metric};
use vessel_centerline::metrics::{correspond, overlap_ov, MatchRule};
use vessel_centerline::pathfind::dijkstra_path;
use vessel_centerline::skeleton::{connected_components, has_deletable_point, resample, thin};
use vessel_centerline::{GroupingConfig, Mask, ScalarVolume, SkeletonPointSet};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn mask_strategy(n: usize) -> impl Strategy<Value = Mask> {
    (any::<u64>(), 0.2f64..0.7).prop_map(move |(seed, fill)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        common::random_mask(&mut rng, [n; 3], fill)
    })
}

fn point_set() -> impl Strategy<Value = SkeletonPointSet> {
    prop::collection::btree_set((0i32..12, 0i32..12, 0i32..4), 2..60).prop_map(|s| {
        let pts: Vec<Voxel> = s.into_iter().map(|(x, y, z)| [x, y, z]).collect();
        SkeletonPointSet::new(pts, [12, 12, 4], [1.0; 3]).unwrap()
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn thinning_is_a_thin_idempotent_subset(mask in mask_strategy(7)) {
        let t = thin(&mask);
        for v in t.foreground() {
            prop_assert!(mask.is_set(v));
        }
        prop_assert_eq!(&thin(&t), &t);
        prop_assert!(!has_deletable_point(&t));
        prop_assert_eq!(common::foreground_components(&t), common::foreground_components(&mask));
        prop_assert_eq!(common::background_components(&t), common::background_components(&mask));
    }

    #[test]
    fn component_count_matches_transitive_closure(mask in mask_strategy(6)) {
        let skel = connected_components(&mask);
        prop_assert_eq!(skel.component_count(), common::closure_component_count(skel.points()));
        // adjacent points always share a component
        for (i, a) in skel.points().iter().enumerate() {
            for (j, b) in skel.points().iter().enumerate() {
                if (0..3).all(|k| (a[k] - b[k]).abs() <= 1) {
                    prop_assert_eq!(skel.component_ids()[i], skel.component_ids()[j]);
                }
            }
        }
    }

    #[test]
    fn dijkstra_cost_is_optimal_and_consistent(seed in any::<u64>(), s in 0usize..64, d in 0usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_affinity(&mut rng, 4);
        let (src, dst) = (a.coord(s), a.coord(d));
        let r = dijkstra_path(&a, src, dst).unwrap();
        prop_assert_eq!(r.path.first(), Some(&src));
        prop_assert_eq!(r.path.last(), Some(&dst));
        prop_assert!((common::walk_cost(&a, &r.path) - r.cost).abs() < 1e-9 * (1.0 + r.cost));
        prop_assert_eq!(r.cost, common::bellman_ford(&a, src)[d]);
    }

    #[test]
    fn raising_affinity_never_raises_cost(seed in any::<u64>(), boost in 0.0f32..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_affinity(&mut rng, 4);
        let raised = ScalarVolume::from_vec(a.dims(), a.spacing(), a.data().iter().map(|v| v + boost).collect()).unwrap();
        let (src, dst) = ([0, 0, 0], [3, 3, 3]);
        prop_assert!(dijkstra_path(&raised, src, dst).unwrap().cost <= dijkstra_path(&a, src, dst).unwrap().cost);
    }

    #[test]
    fn resample_keeps_every_component(skel in point_set(), n in 1usize..80, seed in any::<u64>()) {
        let r = resample(&skel, n, seed);
        let expect = if skel.len() <= n { skel.len() } else { n.max(skel.component_count()) };
        prop_assert_eq!(r.len(), expect);
        for p in r.points() {
            prop_assert!(skel.points().contains(p));
        }
        let mut comps: Vec<u32> = r.component_ids().to_vec();
        comps.sort_unstable();
        comps.dedup();
        prop_assert_eq!(comps.len(), skel.component_count());
        prop_assert_eq!(resample(&skel, n, seed), r);
    }

    #[test]
    fn gag_distance_scales_l2(
        a in prop::array::uniform3(-50.0f64..50.0),
        b in prop::array::uniform3(-50.0f64..50.0),
        lambda in 0.01f64..0.49,
    ) {
        let l2 = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let same = gag_distance(a, b, true, lambda).unwrap();
        let cross = gag_distance(a, b, false, lambda).unwrap();
        prop_assert!((same - lambda * l2).abs() < 1e-9);
        prop_assert!((cross - (1.0 - lambda) * l2).abs() < 1e-9);
        prop_assert!(same <= cross);
        prop_assert_eq!(gag_distance(b, a, true, lambda).unwrap(), same);
    }

    #[test]
    fn knn_graph_has_k_distinct_neighbors(skel in point_set(), k in 1usize..6) {
        prop_assume!(k < skel.len());
        let cfg = GroupingConfig::new(0.3, k).unwrap();
        for metric in [Metric::L2, Metric::Gag] {
            let g = knn_graph(&skel, &cfg, metric).unwrap();
            for (i, nb) in g.iter().enumerate() {
                prop_assert_eq!(nb.len(), k);
                prop_assert!(!nb.contains(&i));
                let mut d = nb.clone();
                d.sort_unstable();
                d.dedup();
                prop_assert_eq!(d.len(), k);
            }
        }
    }

    #[test]
    fn overlap_is_monotone_in_threshold_and_order_free(
        ys in prop::collection::vec(-3.0f64..3.0, 2..12),
        shift in -2.0f64..2.0,
    ) {
        let reference: Vec<[f64; 3]> = (0..=20).map(|i| [i as f64, 0.0, 0.0]).collect();
        let radii = vec![1.0; reference.len()];
        let extracted: Vec<[f64; 3]> = ys.iter().enumerate().map(|(i, &y)| [i as f64 * 2.0 + shift, y, 0.0]).collect();
        let mut reversed = extracted.clone();
        reversed.reverse();
        let mut last = -1.0;
        for t in [0.5, 1.0, 2.0] {
            let c = correspond(&reference, &radii, std::slice::from_ref(&extracted), [1.0; 3], MatchRule::FixedMm(t)).unwrap();
            let ov = overlap_ov(&c);
            prop_assert!(ov >= last);
            last = ov;
            let cr = correspond(&reference, &radii, &[reversed.clone()], [1.0; 3], MatchRule::FixedMm(t)).unwrap();
            prop_assert!((overlap_ov(&cr) - ov).abs() < 1e-12);
        }
    }
}
