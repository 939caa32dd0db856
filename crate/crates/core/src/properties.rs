//! Invariants spanning several modules, checked on random maps.

use crate::geodesics::f_function;
use crate::harness::{distance_encoding_holds, hull_sample, replica_rng, round_trip_holds};
use crate::planar_map::{bfs_distances, Dart, RootedQuadrangulation};
use crate::schaeffer::{
    cvs_forward, cvs_inverse, sample_labeled_tree, sample_quadrangulation, schaeffer_tree,
    LabeledPlaneTree, Sign,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn relabel(map: &RootedQuadrangulation, seed: u64) -> RootedQuadrangulation {
    let mut rng = replica_rng(seed, 0);
    let mut edges: Vec<u32> = (0..map.n_edges() as u32).collect();
    edges.shuffle(&mut rng);
    let flips: Vec<bool> = (0..edges.len()).map(|_| rng.gen()).collect();
    let p = |d: Dart| 2 * edges[(d / 2) as usize] + ((d & 1) ^ flips[(d / 2) as usize] as u32);
    let mut sigma = vec![0; map.n_darts()];
    for d in 0..map.n_darts() as Dart {
        sigma[p(d) as usize] = p(map.sigma(d));
    }
    RootedQuadrangulation::from_sigma(sigma, p(map.root())).unwrap()
}

fn sign_of(b: bool) -> Sign {
    if b {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_and_relabel_invariance(n in 1usize..200, seed: u64) {
        let map = sample_quadrangulation(n, &mut replica_rng(seed, 1));
        prop_assert_eq!(map.n_vertices(), n + 2);
        prop_assert_eq!(map.n_faces(), n);
        let other = relabel(&map, seed);
        prop_assert_eq!(map.canonical_code(), other.canonical_code());
        let a = bfs_distances(&map, map.root_vertex()).unwrap();
        let b = bfs_distances(&other, other.root_vertex()).unwrap();
        prop_assert_eq!(a.eccentricity(), b.eccentricity());
    }

    #[test]
    fn tree_round_trip(n in 1usize..300, seed: u64, plus: bool) {
        let tree = sample_labeled_tree(n, &mut replica_rng(seed, 2));
        let sign = sign_of(plus);
        prop_assert!(round_trip_holds(&tree, sign));
        let pq = cvs_forward(&tree, sign);
        prop_assert!(distance_encoding_holds(&tree, &pq));
        prop_assert_eq!(LabeledPlaneTree::from_ltree(&tree.to_ltree()).unwrap(), tree);
    }

    #[test]
    fn map_round_trip(n in 1usize..300, seed: u64) {
        let mut rng = replica_rng(seed, 3);
        let map = sample_quadrangulation(n, &mut rng);
        let pointed = rng.gen_range(0..map.n_vertices() as u32);
        let (tree, sign) = cvs_inverse(&map, pointed).unwrap();
        let back = cvs_forward(&tree, sign);
        prop_assert_eq!(back.map.canonical_code(), map.canonical_code());
        let d = bfs_distances(&map, pointed).unwrap().get(map.root_vertex());
        let d2 = bfs_distances(&back.map, back.pointed).unwrap().get(back.map.root_vertex());
        prop_assert_eq!(d, d2);
    }

    #[test]
    fn schaeffer_tree_is_local_spanning_tree(n in 1usize..300, seed: u64) {
        let mut rng = replica_rng(seed, 4);
        let map = sample_quadrangulation(n, &mut rng);
        let base = rng.gen_range(0..map.n_vertices() as u32);
        let t = schaeffer_tree(&map, base).unwrap();
        prop_assert!(t.is_spanning_tree(&map));
        prop_assert!(t.arcs_are_face_local(&map));
        prop_assert_eq!(t.arcs.len(), n);
    }

    #[test]
    fn rerooting_keeps_the_map(n in 1usize..200, seed: u64) {
        let mut rng = replica_rng(seed, 5);
        let map = sample_quadrangulation(n, &mut rng);
        let d = rng.gen_range(0..map.n_darts() as u32);
        let re = map.rerooted(d);
        prop_assert_eq!(re.rerooted(map.root()).canonical_code(), map.canonical_code());
        prop_assert_eq!(relabel(&re, seed).canonical_code(), re.canonical_code());
    }

    #[test]
    fn f_takes_three_values(n in 2usize..400, seed: u64) {
        let map = sample_quadrangulation(n, &mut replica_rng(seed, 6));
        let f = f_function(&map, map.root()).unwrap();
        prop_assert!(f.values.iter().all(|v| (-1..=1).contains(v)));
        prop_assert_eq!(f.get(f.x), -1);
        prop_assert_eq!(f.get(f.y), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hull_invariants(n in 200usize..3000, seed: u64) {
        let map = sample_quadrangulation(n, &mut replica_rng(seed, 7));
        let s = hull_sample(&map, 12, 3);
        prop_assert!(s.error.is_none(), "{:?}", s.error);
        prop_assert!(s.invariants_ok);
        for (r, counts) in s.offspring.iter().enumerate().skip(1) {
            prop_assert_eq!(counts.iter().sum::<usize>(), s.cycle_lengths[r - 1]);
        }
    }
}
