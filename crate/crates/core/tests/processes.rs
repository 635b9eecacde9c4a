//! End-to-end behaviour of the generators, the increment step and experiment sweeps.

use std::ops::Range;

use blowup_core::experiment::{run_experiment, ExperimentConfig, ExperimentKind, SCHEMA_LINE};
use blowup_core::formats::WitnessJson;
use blowup_core::generate::{gen_gnp, gen_random_coloring, rng};
use blowup_core::oracle::{verify_blowup, verify_rich_inflation};
use blowup_core::ramsey::{rich_increment, IncrementOutcome};
use blowup_core::rational::{int, ratio};
use blowup_core::{BitSet, Coloring, Graph, Mode, Pattern, RamseyOptions};
use num::BigRational;
use rand::Rng;

#[test]
fn gnp_edge_counts_are_binomial() {
    // Mean and standard deviation of Bin(N, p) with N = 200·199/2.
    let pairs: f64 = 200.0 * 199.0 / 2.0;
    for (seed, p) in [(1u64, 0.1), (2, 0.5), (3, 0.9)] {
        let g = gen_gnp(200, p, seed).unwrap();
        let sd = (pairs * p * (1.0 - p)).sqrt();
        let z = (g.edge_count() as f64 - pairs * p) / sd;
        assert!(z.abs() < 5.0, "p = {p}: z = {z}");
    }
    assert_eq!(gen_gnp(30, 0.0, 0).unwrap().edge_count(), 0);
    assert_eq!(gen_gnp(30, 1.0, 0).unwrap().edge_count(), 435);
    assert_eq!(gen_gnp(50, 0.5, 7).unwrap(), gen_gnp(50, 0.5, 7).unwrap());
}

#[test]
fn random_colorings_are_balanced() {
    let c = gen_random_coloring(300, 3, 11).unwrap();
    let pairs: f64 = 300.0 * 299.0 / 2.0;
    let sd = (pairs * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for size in c.class_sizes() {
        let z = (size as f64 - pairs / 3.0) / sd;
        assert!(z.abs() < 5.0, "z = {z}");
    }
    assert_eq!(c.class_sizes().iter().sum::<usize>(), 300 * 299 / 2);
}

/// Two red cliques `V_1`, `V_2`, red to each other; `V_1` is red to a random
/// fraction of `X_a` and `V_2` to a random fraction of `X_b`, with the cross
/// pairs `V_1 × X_b` red with probability `leak`.
fn engineered<R: Rng>(r: &mut R) -> (Coloring, Vec<BitSet>, BitSet) {
    let m = r.gen_range(3..=7);
    let xa = r.gen_range(3..=9);
    let xb = r.gen_range(3..=9);
    let leak: f64 = if r.gen_bool(0.3) { 1.0 } else { r.gen_range(0.0..0.5) };
    let n = 2 * m + xa + xb;
    let (v1, v2, a, b) = (0..m, m..2 * m, 2 * m..2 * m + xa, 2 * m + xa..n);
    let mut red = vec![vec![false; n]; n];
    let mut set = |u: usize, v: usize| {
        red[u][v] = true;
        red[v][u] = true;
    };
    let pairs = |x: &Range<usize>, y: &Range<usize>| -> Vec<(usize, usize)> {
        x.clone().flat_map(|u| y.clone().map(move |v| (u, v))).filter(|(u, v)| u != v).collect()
    };
    for (u, v) in pairs(&v1, &v1).into_iter().chain(pairs(&v2, &v2)).chain(pairs(&v1, &v2)) {
        set(u, v);
    }
    for (u, v) in pairs(&v1, &a).into_iter().chain(pairs(&v2, &b)) {
        set(u, v);
    }
    for (u, v) in pairs(&v1, &b).into_iter().chain(pairs(&v2, &a)) {
        if r.gen_bool(leak) {
            set(u, v);
        }
    }
    let c = Coloring::from_fn(n, 2, |u, v| usize::from(!red[u][v])).unwrap();
    let parts = vec![BitSet::from_indices(n, v1), BitSet::from_indices(n, v2)];
    (c, parts, BitSet::from_indices(n, 2 * m..n))
}

#[test]
fn rich_increment_dichotomy() {
    let mut r = rng(77);
    let half = ratio(1, 2);
    let eps = ratio(1, 10);
    let (mut extended, mut increments) = (0, 0);
    for i in 0..100 {
        let (c, parts, x) = engineered(&mut r);
        let g = c.class_graph(0);
        let union = parts[0].union(&parts[1]);
        let min_deg = union.iter().map(|y| g.degree_into(y, &x)).min().unwrap();
        let p = ratio(min_deg as i64, x.count() as i64);
        let out = rich_increment(&c, 0, &parts, &x, &p, &half, &eps, &mut r, &RamseyOptions::default())
            .unwrap_or_else(|e| panic!("instance {i}: {e}"));
        match out {
            IncrementOutcome::Extended(rich) => {
                assert_eq!(rich.h(), 3, "instance {i}");
                assert!(verify_rich_inflation(&c, &rich).valid, "instance {i}");
                extended += 1;
            }
            IncrementOutcome::Increment(inc) => {
                assert!(inc.x_prime.is_subset(&x), "instance {i}");
                assert!(!inc.y_prime.is_empty(), "instance {i}");
                assert!(inc.y_prime.is_subset(&parts[inc.i_star]), "instance {i}");
                assert!(inc.p_prime >= &inc.boost * &p, "instance {i}");
                let size = int(inc.x_prime.count() as u64);
                for y in inc.y_prime.iter() {
                    assert!(int(g.degree_into(y, &inc.x_prime) as u64) >= &inc.p_prime * &size, "instance {i}");
                }
                assert!(inc.p_prime <= BigRational::from_integer(1.into()));
                increments += 1;
            }
        }
    }
    assert!(extended > 0 && increments > 0, "extended {extended}, increments {increments}");
}

fn sweep(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        name: "sweep".into(),
        kind,
        pattern: "builtin:c4".into(),
        sizes: vec![20, 28],
        probabilities: vec!["3/5".into(), "0.8".into()],
        colors: vec![2],
        seeds: vec![0, 1, 2],
        mode: Mode::Adaptive,
        retries: 16,
        node_budget: 50_000_000,
        tuple_budget: 100_000,
        k_cap: 10,
        oracle_max_n: 20,
        k_target: 2,
    }
}

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("blowup-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn scaling_sweep_is_deterministic_and_verified() {
    let cfg = sweep(ExperimentKind::Scaling);
    let out = temp_dir("scaling");
    let one = run_experiment(&cfg, Some(&out), 1).unwrap();
    let two = run_experiment(&cfg, None, 2).unwrap();
    assert_eq!(one.rows.len(), 12);
    let strip = |rows: &[blowup_core::experiment::Row]| {
        rows.iter().map(|r| (r.n, r.p.clone(), r.seed, r.k_found, r.k_max, r.status.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&one.rows), strip(&two.rows));
    let dir = one.dir.unwrap();
    let csv = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    assert!(csv.starts_with(SCHEMA_LINE));
    let c4 = Pattern::builtin("c4").unwrap();
    for row in &one.rows {
        if let (Some(found), Some(max)) = (row.k_found, row.k_max) {
            assert!(found <= max, "{row:?}");
        }
        let Some(file) = &row.witness_file else { continue };
        let json: WitnessJson = serde_json::from_str(&std::fs::read_to_string(dir.join(file)).unwrap()).unwrap();
        let p = row.p.as_deref().unwrap();
        let prob = blowup_core::rational::to_f64(&blowup_core::rational::parse(p).unwrap());
        let g: Graph = gen_gnp(row.n, prob, row.seed).unwrap();
        assert!(verify_blowup(&g, &c4, &json.witness()).valid, "{row:?}");
    }
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn ramsey_sweep_reports_monochromatic_witnesses() {
    let mut cfg = sweep(ExperimentKind::Ramsey);
    cfg.pattern = "builtin:p3".into();
    cfg.sizes = vec![64];
    let out = run_experiment(&cfg, None, 1).unwrap();
    assert_eq!(out.rows.len(), 3);
    for row in &out.rows {
        assert_eq!(row.q, Some(2));
        assert!(row.k_found.unwrap_or(0) >= 2, "{row:?}");
    }
}
