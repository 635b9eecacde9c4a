//! Property tests for invariants that hold on every input.

use std::collections::BTreeSet;

use blowup_core::counting::{count_canonical_copies, count_labeled_by, expected_common_neighborhood_size, gamma_degrees, CountMethod};
use blowup_core::finder::{find_blowup_partite, k_theory, step_parameters};
use blowup_core::generate::{gen_gnp, rng};
use blowup_core::oracle::{brute_count_canonical, max_blowup_exact, verify_blowup};
use blowup_core::ramsey::{eta_dominates_closed_form, eta_recursive_bound};
use blowup_core::rational::{self, ratio};
use blowup_core::{BitSet, Coloring, FinderOptions, Graph, Mode, Pattern, SmallGraph};
use num::{BigInt, BigRational, One};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut it = bits.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if it.next().unwrap() {
                        edges.push((u, v));
                    }
                }
            }
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

/// Triangle-free patterns on 1..=5 vertices; triangles are broken by dropping edges.
fn pattern_strategy() -> impl Strategy<Value = Pattern> {
    (1usize..=5, proptest::collection::vec(any::<bool>(), 10)).prop_map(|(h, bits)| {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut it = bits.into_iter();
        for u in 0..h {
            for v in u + 1..h {
                let want = it.next().unwrap();
                let closes_triangle = (0..h).any(|w| {
                    let e = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
                    w != u && w != v && e(u, w) && e(v, w)
                });
                if want && !closes_triangle {
                    edges.push((u, v));
                }
            }
        }
        Pattern::new("prop", SmallGraph::new(h, &edges).unwrap()).unwrap()
    })
}

fn parts_from(n: usize, h: usize, slots: &[usize]) -> Vec<BitSet> {
    let mut parts = vec![BitSet::new(n); h];
    for (v, &slot) in slots.iter().enumerate().take(n) {
        if slot < h {
            parts[slot].insert(v);
        }
    }
    parts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_count_matches_brute_force(
        g in graph_strategy(10),
        p in pattern_strategy(),
        slots in proptest::collection::vec(0usize..6, 10),
    ) {
        let parts = parts_from(g.vertex_count(), p.vertex_count(), &slots);
        let fast = count_canonical_copies(&g, &p, &parts);
        let slow = brute_count_canonical(&g, &p, &parts);
        match (fast, slow) {
            (Ok(f), Ok(s)) => prop_assert_eq!(f.count, s),
            (f, s) => prop_assert_eq!(f.is_err(), s.is_err()),
        }
    }

    #[test]
    fn labeled_count_methods_agree(g in graph_strategy(9), p in pattern_strategy()) {
        let a = count_labeled_by(&g, &p, CountMethod::Elimination).unwrap();
        let b = count_labeled_by(&g, &p, CountMethod::Backtracking).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn common_neighbourhood_moment_dominates_density_power(
        g in graph_strategy(14),
        name in prop::sample::select(vec!["k2", "p3", "p4", "c4", "c5"]),
        slots in proptest::collection::vec(0usize..5, 14),
        s in 1u32..=5,
    ) {
        let p = Pattern::builtin(name).unwrap();
        let parts = parts_from(g.vertex_count(), p.vertex_count(), &slots);
        prop_assume!(parts.iter().all(|x| !x.is_empty()));
        let gd = gamma_degrees(&g, &p, &parts).unwrap();
        let lhs = expected_common_neighborhood_size(&g, &p, &parts, s).unwrap();
        let rhs = rational::pow(&gd.density(), s as usize) * BigRational::from_integer(BigInt::from(gd.a_size));
        prop_assert!(lhs >= rhs);
        prop_assert_eq!(gd.edge_count(), count_canonical_copies(&g, &p, &parts).unwrap().count);
    }

    #[test]
    fn partite_witnesses_verify(
        n in 6usize..40,
        pct in 30u32..100,
        seed in any::<u64>(),
        name in prop::sample::select(vec!["k2", "p3", "p4", "c4", "c5"]),
        adaptive in any::<bool>(),
    ) {
        let p = Pattern::builtin(name).unwrap();
        let h = p.vertex_count();
        prop_assume!(n >= h);
        let g = gen_gnp(n, f64::from(pct) / 100.0, seed).unwrap();
        let parts: Vec<BitSet> = (0..h).map(|i| BitSet::from_indices(n, (0..n).filter(|v| v % h == i))).collect();
        let mode = if adaptive { Mode::Adaptive } else { Mode::Guaranteed };
        if let Ok(w) = find_blowup_partite(&g, &p, &parts, mode, &mut rng(seed), &FinderOptions::default()) {
            prop_assert!(verify_blowup(&g, &p, &w).valid);
            for (class, part) in w.classes.iter().zip(&parts) {
                prop_assert!(class.iter().all(|&v| part.contains(v)));
            }
        }
    }

    #[test]
    fn max_blowup_is_monotone_under_edge_addition(g in graph_strategy(10), u in 0usize..10, v in 0usize..10) {
        let n = g.vertex_count();
        prop_assume!(u < n && v < n && u != v);
        let p = Pattern::builtin("p3").unwrap();
        let before = max_blowup_exact(&g, &p, 5, 10_000_000);
        let after = max_blowup_exact(&g.with_edge(u, v), &p, 5, 10_000_000);
        prop_assert!(before.complete && after.complete);
        prop_assert!(before.k_max <= after.k_max);
        if let Some(w) = &after.witness {
            prop_assert!(verify_blowup(&g.with_edge(u, v), &p, w).valid);
        }
    }

    #[test]
    fn bitset_matches_btreeset(
        a in proptest::collection::btree_set(0usize..200, 0..60),
        b in proptest::collection::btree_set(0usize..200, 0..60),
    ) {
        let x = BitSet::from_indices(200, a.iter().copied());
        let y = BitSet::from_indices(200, b.iter().copied());
        let vec = |s: BTreeSet<usize>| s.into_iter().collect::<Vec<_>>();
        prop_assert_eq!(x.intersection(&y).to_vec(), vec(a.intersection(&b).copied().collect()));
        prop_assert_eq!(x.union(&y).to_vec(), vec(a.union(&b).copied().collect()));
        prop_assert_eq!(x.difference(&y).to_vec(), vec(a.difference(&b).copied().collect()));
        prop_assert_eq!(x.intersection_count(&y), a.intersection(&b).count());
        prop_assert_eq!(x.is_disjoint(&y), a.is_disjoint(&b));
        prop_assert_eq!(x.is_subset(&y), a.is_subset(&b));
        prop_assert_eq!(x.count(), a.len());
    }

    #[test]
    fn graph_text_round_trips(g in graph_strategy(20)) {
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        let back = Graph::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn coloring_text_round_trips(n in 2usize..20, q in 1usize..4, seed in any::<u64>()) {
        let c = blowup_core::generate::gen_random_coloring(n, q, seed).unwrap();
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        let back = Coloring::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert!((0..n).all(|u| (0..n).filter(|&v| v != u).all(|v| back.color(u, v) == c.color(u, v))));
        prop_assert_eq!(back.class_sizes(), c.class_sizes());
    }

    #[test]
    fn rationals_round_trip(num in -10_000i64..10_000, den in 1i64..10_000) {
        let r = ratio(num, den);
        prop_assert_eq!(rational::parse(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn eta_dominates_everywhere_in_range(q in 2usize..=5, h in 1usize..=4, d in 9u64..=200) {
        let eps = ratio(1, d);
        prop_assert!(eta_dominates_closed_form(q, h, &eps).unwrap());
        // Smaller eps can only shrink the bound.
        let tighter = eta_recursive_bound(q, h, &ratio(1, d + 1)).unwrap();
        prop_assert!(tighter.log2() <= eta_recursive_bound(q, h, &eps).unwrap().log2() + 1e-9);
    }

    #[test]
    fn sample_size_is_minimal(num in 1u64..100, den in 2u64..200, n in 2u64..1_000_000) {
        prop_assume!(num < den);
        let gamma = ratio(num, den);
        let p = step_parameters(&gamma, n, 2, 8).unwrap();
        let nn = BigRational::from_integer(BigInt::from(n));
        let at = |s: usize| rational::pow(&p.gamma, 4 * s) * &nn;
        prop_assert!(at(p.s) <= BigRational::one());
        prop_assert!(p.s == 0 || at(p.s - 1) > BigRational::one());
        prop_assert!(p.gamma <= ratio(1, 2));
    }

    #[test]
    fn k_theory_is_monotone_in_gamma(n in 2u64..1_000_000, a in 1u64..50, b in 1u64..50) {
        let alpha = ratio(1, 64);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(k_theory(&alpha, n, &ratio(lo, 100)) <= k_theory(&alpha, n, &ratio(hi, 100)));
    }
}
