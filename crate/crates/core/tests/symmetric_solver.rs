//! The symmetry-reduced exact solver must agree with the plain one.

use capacity_core::automorphism::GraphSymmetry;
use capacity_core::exact::{max_weight_is, max_weight_is_with, Budget, Solution, SolveOptions, WeightedGraph};
use capacity_core::orbitgraph::OrbitGraph;
use capacity_core::symmetry::{Group, GroupElement, ORBIT_LIMIT};
use capacity_core::torus::CycleParams;
use proptest::prelude::*;

fn solve_symmetric(g: &WeightedGraph, sym: &GraphSymmetry, start: &Solution) -> (u64, bool) {
    let opts = SolveOptions {
        incumbent: Some(start),
        symmetry: Some(sym),
        ..SolveOptions::default()
    };
    let out = max_weight_is_with(g, &Budget::unlimited(), &opts);
    assert!(out.solution.is_valid_for(g));
    (out.solution.weight(), out.optimal)
}

/// Starting points: the optimum, the optimum less one vertex, one vertex.
fn starts(g: &WeightedGraph, best: &Solution) -> Vec<Solution> {
    let v = best.vertices();
    [v.len(), v.len().saturating_sub(1), v.len().min(1)]
        .into_iter()
        .map(|k| Solution::new(g, v[..k].to_vec()).unwrap())
        .collect()
}

#[test]
fn tori_match_plain_solver() {
    for (p, d) in [(4, 2), (5, 2), (6, 2), (7, 2), (9, 2), (11, 2), (4, 3), (5, 3)] {
        let params = CycleParams::new(p, d).unwrap();
        let og = OrbitGraph::build(&Group::trivial(&params), ORBIT_LIMIT).unwrap();
        let g = og.graph();
        let sym = GraphSymmetry::from_generators(g, &og.symmetry_generators()).unwrap();
        let plain = max_weight_is(g, &Budget::unlimited());
        assert!(plain.optimal);
        for start in starts(g, &plain.solution) {
            let (w, optimal) = solve_symmetric(g, &sym, &start);
            assert_eq!((w, optimal), (plain.solution.weight(), true), "C_{p}^{d} from {}", start.weight());
        }
    }
}

#[test]
fn orbit_graphs_match_plain_solver() {
    for (p, d, offsets) in [(7, 3, vec![1, 2, 3]), (9, 3, vec![0, 1, 3]), (5, 4, vec![1, 1, 2, 3])] {
        let params = CycleParams::new(p, d).unwrap();
        let g = GroupElement::translation(&params, &offsets).unwrap();
        let og = OrbitGraph::build(&Group::cyclic(&params, g).unwrap(), ORBIT_LIMIT).unwrap();
        let graph = og.graph();
        let sym = GraphSymmetry::from_generators(graph, &og.symmetry_generators()).unwrap();
        let plain = max_weight_is(graph, &Budget::unlimited());
        for start in starts(graph, &plain.solution) {
            assert_eq!(solve_symmetric(graph, &sym, &start), (plain.solution.weight(), true));
        }
    }
}

/// Circulant graph on `n` vertices: `i ~ j` iff `|i - j| mod n` is in `jumps`
/// (either direction). Optionally a second, disjoint copy with other weights.
fn circulant(n: usize, jumps: &[usize], weights: (u64, Option<u64>)) -> (WeightedGraph, Vec<Vec<usize>>) {
    let copies = if weights.1.is_some() { 2 } else { 1 };
    let mut w = vec![weights.0; n];
    if let Some(second) = weights.1 {
        w.extend(std::iter::repeat_n(second, n));
    }
    let mut edges = Vec::new();
    for c in 0..copies {
        for i in 0..n {
            for &j in jumps {
                let k = (i + j) % n;
                if k != i {
                    edges.push((c * n + i, c * n + k));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let g = WeightedGraph::from_edges(w, &edges).unwrap();
    let lift = |f: &dyn Fn(usize) -> usize| -> Vec<usize> { (0..copies * n).map(|v| (v / n) * n + f(v % n)).collect() };
    let generators = vec![lift(&|i| (i + 1) % n), lift(&|i| (n - i) % n)];
    (g, generators)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn circulants_match_plain_solver(
        n in 4usize..=28,
        jumps in prop::collection::vec(1usize..=14, 1..=3),
        first in 1u64..=4,
        second in prop::option::of(1u64..=4),
    ) {
        let (g, generators) = circulant(n, &jumps, (first, second));
        let sym = GraphSymmetry::from_generators(&g, &generators).unwrap();
        let plain = max_weight_is(&g, &Budget::unlimited());
        prop_assert!(plain.optimal);
        for start in starts(&g, &plain.solution) {
            prop_assert_eq!(solve_symmetric(&g, &sym, &start), (plain.solution.weight(), true));
        }
    }
}
