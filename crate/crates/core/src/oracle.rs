//! Brute-force ground truth: naive counting, witness checking, and an exact
//! branch-and-bound search for the largest blowup.
//!
//! Nothing here shares code with the counting engine or the finders.

use num::{BigRational, BigUint, One, Zero};
use serde::Serialize;

use crate::bitset::BitSet;
use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::parts::BlowupWitness;
use crate::pattern::{Pattern, SmallGraph};
use crate::ramsey::RichInflation;

/// Largest tuple space the naive counter will enumerate.
pub const BRUTE_GUARD: u128 = 100_000_000;

/// Canonical copies by plain nested loops over every tuple, with no pruning.
pub fn brute_count_canonical(g: &Graph, pattern: &SmallGraph, parts: &[BitSet]) -> Result<BigUint> {
    let h = pattern.vertex_count();
    if parts.len() != h {
        return Err(Error::InvalidInput(format!(
            "{} parts for a pattern on {h} vertices",
            parts.len()
        )));
    }
    let lists: Vec<Vec<usize>> = parts.iter().map(|p| p.iter().collect()).collect();
    let space = lists
        .iter()
        .fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128));
    if space > BRUTE_GUARD {
        return Err(Error::GuardExceeded(format!(
            "{space} tuples exceed the brute-force limit {BRUTE_GUARD}"
        )));
    }
    if space == 0 {
        return Ok(BigUint::default());
    }
    let edges = pattern.edges();
    let mut idx = vec![0usize; h];
    let mut count = 0u64;
    'outer: loop {
        if edges
            .iter()
            .all(|&(a, b)| g.has_edge(lists[a][idx[a]], lists[b][idx[b]]))
        {
            count += 1;
        }
        for j in (0..h).rev() {
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    Ok(BigUint::from(count))
}

/// The first way in which a witness fails to span a blowup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ClassCount { expected: usize, found: usize },
    ClassSize { class: usize, size: usize, k: usize },
    OutOfRange { class: usize, vertex: usize },
    /// A vertex appearing twice, within one class or across two.
    Overlap { vertex: usize, classes: (usize, usize) },
    MissingEdge { u: usize, v: usize, classes: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlowupCheck {
    pub valid: bool,
    pub violation: Option<Violation>,
}

impl BlowupCheck {
    fn fail(v: Violation) -> Self {
        Self {
            valid: false,
            violation: Some(v),
        }
    }
}

/// Checks that the classes are disjoint, all of size `k`, and complete to
/// each other across every pattern edge. Classes need not be independent.
pub fn verify_blowup(g: &Graph, pattern: &SmallGraph, witness: &BlowupWitness) -> BlowupCheck {
    let h = pattern.vertex_count();
    let classes = &witness.classes;
    if classes.len() != h {
        return BlowupCheck::fail(Violation::ClassCount {
            expected: h,
            found: classes.len(),
        });
    }
    for (i, c) in classes.iter().enumerate() {
        if c.len() != witness.k {
            return BlowupCheck::fail(Violation::ClassSize {
                class: i,
                size: c.len(),
                k: witness.k,
            });
        }
    }
    let n = g.vertex_count();
    let mut owner = vec![usize::MAX; n];
    for (i, c) in classes.iter().enumerate() {
        for &v in c {
            if v >= n {
                return BlowupCheck::fail(Violation::OutOfRange { class: i, vertex: v });
            }
            if owner[v] != usize::MAX {
                return BlowupCheck::fail(Violation::Overlap {
                    vertex: v,
                    classes: (owner[v], i),
                });
            }
            owner[v] = i;
        }
    }
    for (a, b) in pattern.edges() {
        for &u in &classes[a] {
            for &v in &classes[b] {
                if !g.has_edge(u, v) {
                    return BlowupCheck::fail(Violation::MissingEdge {
                        u,
                        v,
                        classes: (a, b),
                    });
                }
            }
        }
    }
    BlowupCheck {
        valid: true,
        violation: None,
    }
}

/// Measured quality of a claimed rich inflation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RichCheck {
    pub valid: bool,
    /// Edge density of the first part in the color (1 below two vertices).
    pub rho_actual: BigRational,
    /// Canonical clique density in the color.
    pub gamma_actual: BigRational,
}

/// Canonical cliques with one vertex per part, monochromatic in `color`,
/// counted by nested candidate filtering on pair colors.
fn clique_count(coloring: &Coloring, color: usize, parts: &[Vec<usize>]) -> BigUint {
    fn go(coloring: &Coloring, color: usize, cands: &[Vec<usize>]) -> BigUint {
        match cands {
            [] => BigUint::from(1u8),
            [last] => BigUint::from(last.len()),
            [first, rest @ ..] => {
                let mut total = BigUint::from(0u8);
                for &y in first {
                    let next: Vec<Vec<usize>> = rest
                        .iter()
                        .map(|c| c.iter().copied().filter(|&z| coloring.color(y, z) == color).collect())
                        .collect();
                    if next.iter().all(|c| !c.is_empty()) {
                        total += go(coloring, color, &next);
                    }
                }
                total
            }
        }
    }
    go(coloring, color, parts)
}

/// Recounts the first-part density and the clique density of a rich
/// inflation directly from the pair colors.
pub fn verify_rich_inflation(coloring: &Coloring, rich: &RichInflation) -> RichCheck {
    let lists: Vec<Vec<usize>> = rich.parts().iter().map(BitSet::to_vec).collect();
    let n = coloring.vertex_count();
    let mut seen = vec![false; n];
    let mut disjoint = rich.color < coloring.color_count();
    for &v in lists.iter().flatten() {
        if v >= n || seen[v] {
            disjoint = false;
            break;
        }
        seen[v] = true;
    }
    let zero = BigRational::zero();
    if !disjoint || lists.is_empty() || lists.iter().any(Vec::is_empty) {
        return RichCheck {
            valid: false,
            rho_actual: zero.clone(),
            gamma_actual: zero,
        };
    }
    let v1 = &lists[0];
    let mut inside = 0u64;
    for (i, &u) in v1.iter().enumerate() {
        for &v in &v1[i + 1..] {
            if coloring.color(u, v) == rich.color {
                inside += 1;
            }
        }
    }
    let pairs = (v1.len() as u64) * (v1.len() as u64 - 1) / 2;
    let rho_actual = if pairs == 0 {
        BigRational::one()
    } else {
        BigRational::new(inside.into(), pairs.into())
    };
    let total: BigUint = lists.iter().map(|l| BigUint::from(l.len())).product();
    let count = clique_count(coloring, rich.color, &lists);
    let gamma_actual = BigRational::new(count.into(), total.into());
    let h = lists.len();
    let floor = num::pow((BigRational::one() - &rich.eps) * &rich.rho, h * (h - 1) / 2);
    let dense = BigRational::from_integer(inside.into()) >= &rich.rho * BigRational::from_integer(pairs.into());
    RichCheck {
        valid: dense && gamma_actual >= floor,
        rho_actual,
        gamma_actual,
    }
}

/// Outcome of the exact maximum-blowup search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MaxBlowupResult {
    /// Largest `k` found (0 when the pattern has no copy at all).
    pub k_max: usize,
    pub witness: Option<BlowupWitness>,
    pub nodes_explored: u64,
    /// True when `k_max + 1` was refuted by exhausted search, or `k_max`
    /// reached the cap. False means `k_max` is only a lower bound.
    pub complete: bool,
}

enum Outcome {
    Found,
    Absent,
    OutOfBudget,
}

struct Search<'a> {
    g: Graph,
    adj: Vec<u64>,
    /// Class assignment order (pattern vertices).
    order: Vec<usize>,
    k: usize,
    budget: u64,
    nodes: &'a mut u64,
    classes: Vec<Vec<usize>>,
    class_cn: Vec<Option<BitSet>>,
    used: BitSet,
}

impl Search<'_> {
    /// Vertices still available to pattern vertex `v` under current choices.
    fn base(&self, v: usize) -> BitSet {
        let n = self.g.vertex_count();
        let mut out = BitSet::full(n);
        out.difference_with(&self.used);
        for (u, cn) in self.class_cn.iter().enumerate() {
            if let Some(cn) = cn {
                if self.adj[v] >> u & 1 == 1 {
                    out.intersect_with(cn);
                }
            }
        }
        out
    }

    fn assign(&mut self, idx: usize) -> Outcome {
        let h = self.order.len();
        if idx == h {
            return Outcome::Found;
        }
        let v = self.order[idx];
        let cand = self.base(v);
        if cand.count() < self.k {
            return Outcome::Absent;
        }
        let remaining = self.order[idx..].len();
        let free = self.g.vertex_count() - self.used.count();
        if free < remaining * self.k {
            return Outcome::Absent;
        }
        if idx + 1 == h {
            self.classes[v] = cand.iter().take(self.k).collect();
            return Outcome::Found;
        }
        let future: Vec<(usize, BitSet)> = self.order[idx + 1..]
            .iter()
            .filter(|&&u| self.adj[v] >> u & 1 == 1)
            .map(|&u| (u, self.base(u)))
            .collect();
        let list: Vec<usize> = cand.iter().collect();
        let mut chosen = Vec::with_capacity(self.k);
        let running = BitSet::full(self.g.vertex_count());
        self.choose(idx, &list, 0, &mut chosen, running, &future)
    }

    fn choose(
        &mut self,
        idx: usize,
        list: &[usize],
        start: usize,
        chosen: &mut Vec<usize>,
        running: BitSet,
        future: &[(usize, BitSet)],
    ) -> Outcome {
        let v = self.order[idx];
        if chosen.len() == self.k {
            for &x in chosen.iter() {
                self.used.insert(x);
            }
            self.class_cn[v] = Some(running);
            self.classes[v] = chosen.clone();
            let r = self.assign(idx + 1);
            self.class_cn[v] = None;
            for &x in chosen.iter() {
                self.used.remove(x);
            }
            return r;
        }
        let need = self.k - chosen.len();
        for pos in start..list.len() {
            if list.len() - pos < need {
                break;
            }
            *self.nodes += 1;
            if *self.nodes > self.budget {
                return Outcome::OutOfBudget;
            }
            let x = list[pos];
            let mut next = running.clone();
            next.intersect_with(self.g.neighbors(x));
            if future
                .iter()
                .any(|(_, base)| next.intersection_count(base) < self.k)
            {
                continue;
            }
            chosen.push(x);
            let r = self.choose(idx, list, pos + 1, chosen, next, future);
            chosen.pop();
            match r {
                Outcome::Absent => {}
                other => return other,
            }
        }
        Outcome::Absent
    }
}

/// Exact largest `k` (up to `k_cap`) with a copy of `H[k]` in `G`, by
/// branch-and-bound over class choices. Classes are filled in pattern order
/// position `0, 1, …`; vertices are tried in descending degree and chosen in
/// ascending rank inside a class. `node_budget` bounds the vertex choices
/// made across the whole search.
pub fn max_blowup_exact(g: &Graph, pattern: &Pattern, k_cap: usize, node_budget: u64) -> MaxBlowupResult {
    let n = g.vertex_count();
    let h = pattern.vertex_count();
    // Relabel so that rank order is index order.
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut pos = vec![0; n];
    for (i, &v) in rank.iter().enumerate() {
        pos[v] = i;
    }
    let relabeled = Graph::from_edges(
        n,
        &g.edges().map(|(u, v)| (pos[u], pos[v])).collect::<Vec<_>>(),
    )
    .expect("relabeling preserves validity");
    let adj: Vec<u64> = (0..h).map(|v| pattern.neighbor_mask(v)).collect();

    let mut nodes = 0u64;
    let mut best: Option<BlowupWitness> = None;
    let mut k_max = 0;
    let mut complete = true;
    let mut g_slot = Some(relabeled);
    for k in 1..=k_cap {
        if k * h > n {
            break;
        }
        let mut search = Search {
            g: g_slot.take().expect("graph available"),
            adj: adj.clone(),
            order: pattern.order().to_vec(),
            k,
            budget: node_budget,
            nodes: &mut nodes,
            classes: vec![Vec::new(); h],
            class_cn: vec![None; h],
            used: BitSet::new(n),
        };
        let outcome = search.assign(0);
        let classes = std::mem::take(&mut search.classes);
        g_slot = Some(search.g);
        match outcome {
            Outcome::Found => {
                k_max = k;
                best = Some(BlowupWitness::new(
                    classes
                        .into_iter()
                        .map(|c| c.into_iter().map(|x| rank[x]).collect())
                        .collect(),
                ));
            }
            Outcome::Absent => break,
            Outcome::OutOfBudget => {
                complete = false;
                break;
            }
        }
    }
    MaxBlowupResult {
        k_max,
        witness: best,
        nodes_explored: nodes,
        complete,
    }
}
