//! Seeded instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::BitSet;
use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pattern::SmallGraph;

/// The seeded generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi `G(n, p)`; identical seeds give identical graphs.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = rng(seed);
    let mut rows = vec![BitSet::new(n); n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                rows[u].insert(v);
                rows[v].insert(u);
            }
        }
    }
    Ok(Graph::from_rows(rows))
}

/// `H[k]`: pattern vertex `i` becomes the block `i*k .. (i+1)*k`.
pub fn gen_blowup(pattern: &SmallGraph, k: usize) -> Result<Graph> {
    if k == 0 {
        return Err(Error::InvalidInput("blowup size must be at least 1".into()));
    }
    let n = pattern.vertex_count() * k;
    let mut rows = vec![BitSet::new(n); n];
    for (a, b) in pattern.edges() {
        for x in a * k..(a + 1) * k {
            for y in b * k..(b + 1) * k {
                rows[x].insert(y);
                rows[y].insert(x);
            }
        }
    }
    Ok(Graph::from_rows(rows))
}

/// The blowup classes of [`gen_blowup`] as vertex sets.
pub fn blowup_classes(h: usize, k: usize) -> Vec<BitSet> {
    (0..h)
        .map(|i| BitSet::from_indices(h * k, i * k..(i + 1) * k))
        .collect()
}

/// Uniform independent color for every pair.
pub fn gen_random_coloring(n: usize, q: usize, seed: u64) -> Result<Coloring> {
    if q == 0 {
        return Err(Error::InvalidInput("need at least one color".into()));
    }
    let mut rng = rng(seed);
    Coloring::from_fn(n, q, |_, _| rng.gen_range(0..q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_extremes_and_determinism() {
        assert_eq!(gen_gnp(20, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(gen_gnp(20, 1.0, 1).unwrap().edge_count(), 190);
        assert_eq!(gen_gnp(50, 0.5, 9).unwrap(), gen_gnp(50, 0.5, 9).unwrap());
        assert!(gen_gnp(5, 1.5, 0).is_err());
    }

    #[test]
    fn blowup_shapes() {
        let k2 = SmallGraph::complete(2);
        let g = gen_blowup(&k2, 3).unwrap();
        assert_eq!(g.edge_count(), 9);
        assert!(g.has_edge(0, 5) && !g.has_edge(0, 1));
        let c5 = SmallGraph::cycle(5);
        assert_eq!(gen_blowup(&c5, 2).unwrap().edge_count(), 20);
        let one = gen_blowup(&c5, 1).unwrap();
        for (a, b) in c5.edges() {
            assert!(one.has_edge(a, b));
        }
        assert_eq!(one.edge_count(), 5);
    }

    #[test]
    fn colorings() {
        let c = gen_random_coloring(10, 1, 3).unwrap();
        assert_eq!(c.class_sizes(), vec![45]);
        let c = gen_random_coloring(2, 3, 3).unwrap();
        assert_eq!(c.class_sizes().iter().sum::<usize>(), 1);
    }
}
