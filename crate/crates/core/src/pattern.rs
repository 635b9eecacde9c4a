//! Small fixed graphs (the graph `H` whose blowups are sought) and elimination orders.

use std::io::BufRead;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::graph::parse_edge_list;

/// Maximum number of vertices of a pattern; adjacency is one `u64` mask per vertex.
pub const MAX_PATTERN_VERTICES: usize = 64;

/// A graph on vertices `0..h` with `h <= 64`, stored as adjacency masks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    adj: Vec<u64>,
}

impl SmallGraph {
    pub fn new(h: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if h > MAX_PATTERN_VERTICES {
            return Err(Error::InvalidPattern(format!(
                "{h} vertices exceeds the limit of {MAX_PATTERN_VERTICES}"
            )));
        }
        let mut adj = vec![0u64; h];
        for &(u, v) in edges {
            if u >= h || v >= h {
                return Err(Error::InvalidPattern(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidPattern(format!("loop at vertex {u}")));
            }
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        Ok(Self { adj })
    }

    pub fn complete(h: usize) -> Self {
        let edges: Vec<_> = (0..h)
            .flat_map(|u| (u + 1..h).map(move |v| (u, v)))
            .collect();
        Self::new(h, &edges).expect("valid complete graph")
    }

    pub fn path(h: usize) -> Self {
        let edges: Vec<_> = (1..h).map(|v| (v - 1, v)).collect();
        Self::new(h, &edges).expect("valid path")
    }

    pub fn cycle(h: usize) -> Self {
        assert!(h >= 3);
        let edges: Vec<_> = (0..h).map(|v| (v, (v + 1) % h)).collect();
        Self::new(h, &edges).expect("valid cycle")
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((i + 5, (i + 2) % 5 + 5));
        }
        Self::new(10, &edges).expect("valid Petersen graph")
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    /// Neighbourhood of `v` as a bit mask over `0..h`.
    #[inline]
    pub fn neighbor_mask(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        mask_iter(self.adj[v])
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        (self.adj[u] >> v) & 1 == 1
    }

    /// Edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.vertex_count())
            .flat_map(|u| self.neighbors(u).filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }

    /// Whether the vertices in `mask` span no edge.
    pub fn is_independent(&self, mask: u64) -> bool {
        mask_iter(mask).all(|v| self.adj[v] & mask == 0)
    }

    pub fn is_triangle_free(&self) -> bool {
        (0..self.vertex_count()).all(|v| self.is_independent(self.adj[v]))
    }

    /// The graph with vertex `v` deleted; vertices above `v` shift down by one,
    /// matching `Vec::remove(v)` on per-vertex data.
    pub fn without_vertex(&self, v: usize) -> SmallGraph {
        let relabel = |m: u64| -> u64 {
            let low = m & ((1u64 << v) - 1);
            let high = if v + 1 >= 64 { 0 } else { m >> (v + 1) };
            low | (high << v)
        };
        let adj = (0..self.vertex_count())
            .filter(|&u| u != v)
            .map(|u| relabel(self.adj[u]))
            .collect();
        SmallGraph { adj }
    }

    /// Minimum-degree removal sequence (ties by lowest index): the first entry
    /// is removed first.
    pub fn degeneracy_removal_sequence(&self) -> Vec<usize> {
        let h = self.vertex_count();
        let mut alive: u64 = if h == 64 { u64::MAX } else { (1u64 << h) - 1 };
        let mut seq = Vec::with_capacity(h);
        while alive != 0 {
            let v = mask_iter(alive)
                .min_by_key(|&v| ((self.adj[v] & alive).count_ones(), v))
                .expect("nonempty");
            seq.push(v);
            alive &= !(1u64 << v);
        }
        seq
    }
}

pub(crate) fn mask_iter(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(v)
        }
    })
}

/// Outcome of checking an elimination order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderCheck {
    pub valid: bool,
    /// Position (index into the order) of the first elimination step whose
    /// remaining neighbourhood is not independent.
    pub first_violation: Option<usize>,
}

/// Checks that eliminating `order[h-1]`, then `order[h-2]`, ... only ever
/// removes a vertex whose neighbourhood among the vertices still present
/// (those earlier in `order`) is independent. Returns `valid = false` with no
/// position if `order` is not a permutation of `0..h`.
pub fn validate_elimination_order(h: usize, edges: &[(usize, usize)], order: &[usize]) -> OrderCheck {
    let invalid = OrderCheck {
        valid: false,
        first_violation: None,
    };
    let Ok(graph) = SmallGraph::new(h, edges) else {
        return invalid;
    };
    if order.len() != h {
        return invalid;
    }
    let mut seen = 0u64;
    for &v in order {
        if v >= h || (seen >> v) & 1 == 1 {
            return invalid;
        }
        seen |= 1 << v;
    }
    let mut present = seen;
    for pos in (0..h).rev() {
        let v = order[pos];
        present &= !(1u64 << v);
        if !graph.is_independent(graph.neighbor_mask(v) & present) {
            return OrderCheck {
                valid: false,
                first_violation: Some(pos),
            };
        }
    }
    OrderCheck {
        valid: true,
        first_violation: None,
    }
}

/// A pattern graph together with an elimination order in which every
/// eliminated vertex has an independent neighbourhood.
///
/// `order[h-1]` is eliminated first; after removing it the remaining order
/// `order[..h-1]` is again valid for the smaller pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    name: String,
    graph: SmallGraph,
    order: Vec<usize>,
}

impl Deref for Pattern {
    type Target = SmallGraph;
    fn deref(&self) -> &SmallGraph {
        &self.graph
    }
}

impl Pattern {
    /// Builds a pattern, deriving the order from the reverse degeneracy order.
    pub fn new(name: impl Into<String>, graph: SmallGraph) -> Result<Self> {
        let mut order = graph.degeneracy_removal_sequence();
        order.reverse();
        Self::with_order(name, graph, order)
    }

    pub fn with_order(name: impl Into<String>, graph: SmallGraph, order: Vec<usize>) -> Result<Self> {
        let check = validate_elimination_order(graph.vertex_count(), &graph.edges(), &order);
        if !check.valid {
            return Err(match check.first_violation {
                Some(pos) => Error::InvalidPattern(format!(
                    "vertex {} at order position {pos} has a non-independent neighbourhood \
                     (the pattern must be triangle-free)",
                    order[pos]
                )),
                None => Error::InvalidPattern("order is not a permutation of the vertices".into()),
            });
        }
        Ok(Self {
            name: name.into(),
            graph,
            order,
        })
    }

    /// Built-in patterns: `k1`, `k2`, `p3`, `p4`, `c4`, `c5`, `petersen`.
    pub fn builtin(name: &str) -> Result<Self> {
        let graph = match name {
            "k1" => SmallGraph::new(1, &[])?,
            "k2" => SmallGraph::complete(2),
            "p3" => SmallGraph::path(3),
            "p4" => SmallGraph::path(4),
            "c4" => SmallGraph::cycle(4),
            "c5" => SmallGraph::cycle(5),
            "petersen" => SmallGraph::petersen(),
            other => {
                return Err(Error::InvalidPattern(format!("unknown builtin pattern `{other}`")))
            }
        };
        Self::new(name, graph)
    }

    /// Reads the edge-list format with an optional third header token naming the pattern.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let list = parse_edge_list(reader)?;
        let graph = SmallGraph::new(list.n, &list.edges)?;
        Self::new(list.name.unwrap_or_else(|| "pattern".into()), graph)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graph(&self) -> &SmallGraph {
        &self.graph
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The vertex removed by the next elimination step.
    pub fn eliminated(&self) -> usize {
        *self.order.last().expect("pattern has at least one vertex")
    }

    /// Degree of the next eliminated vertex.
    pub fn eliminated_degree(&self) -> usize {
        self.degree(self.eliminated())
    }

    /// The pattern after one elimination step, relabelled as in
    /// [`SmallGraph::without_vertex`].
    pub fn without_eliminated(&self) -> Pattern {
        let v = self.eliminated();
        let order = self.order[..self.order.len() - 1]
            .iter()
            .map(|&u| if u > v { u - 1 } else { u })
            .collect();
        Pattern {
            name: format!("{}-{}", self.name, v),
            graph: self.graph.without_vertex(v),
            order,
        }
    }

    /// Degrees of the eliminated vertex at each step, first step first.
    pub fn elimination_degrees(&self) -> Vec<usize> {
        let mut present: u64 = self.order.iter().fold(0, |m, &v| m | (1 << v));
        let mut out = Vec::with_capacity(self.order.len());
        for &v in self.order.iter().rev() {
            present &= !(1u64 << v);
            out.push((self.graph.neighbor_mask(v) & present).count_ones() as usize);
        }
        out
    }

    /// Largest eliminated-vertex degree along the order.
    pub fn order_degeneracy(&self) -> usize {
        self.elimination_degrees().into_iter().max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_orders(h: usize) -> Vec<Vec<usize>> {
        fn rec(cur: &mut Vec<usize>, used: u64, h: usize, out: &mut Vec<Vec<usize>>) {
            if cur.len() == h {
                out.push(cur.clone());
                return;
            }
            for v in 0..h {
                if used >> v & 1 == 0 {
                    cur.push(v);
                    rec(cur, used | 1 << v, h, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), 0, h, &mut out);
        out
    }

    #[test]
    fn c5_accepts_every_order() {
        let c5 = SmallGraph::cycle(5);
        for order in all_orders(5) {
            assert!(validate_elimination_order(5, &c5.edges(), &order).valid);
        }
    }

    #[test]
    fn triangle_fails_at_first_elimination() {
        let k3 = SmallGraph::complete(3);
        for order in all_orders(3) {
            let check = validate_elimination_order(3, &k3.edges(), &order);
            assert_eq!(check.first_violation, Some(2), "{order:?}");
        }
    }

    #[test]
    fn paw_with_pendant_last_fails() {
        // Triangle 0,1,2 with pendant 3 attached to 0.
        let edges = [(0, 1), (1, 2), (0, 2), (0, 3)];
        let mut hits = 0;
        for order in all_orders(4) {
            if order[0] != 3 {
                continue;
            }
            hits += 1;
            let check = validate_elimination_order(4, &edges, &order);
            assert!(!check.valid);
            let pos = check.first_violation.unwrap();
            assert!(order[pos] != 3, "violation must be at a triangle vertex");
        }
        assert_eq!(hits, 6);
    }

    #[test]
    fn non_permutation_is_rejected() {
        let edges = [(0, 1)];
        assert!(!validate_elimination_order(2, &edges, &[0, 0]).valid);
        assert!(!validate_elimination_order(2, &edges, &[0]).valid);
    }

    #[test]
    fn triangle_patterns_rejected_at_construction() {
        assert!(Pattern::new("k3", SmallGraph::complete(3)).is_err());
        assert!(Pattern::builtin("c5").is_ok());
        assert!(Pattern::builtin("nope").is_err());
    }

    #[test]
    fn degeneracy_order_eliminates_low_degree_first() {
        // Star with centre 0: two leaves go first, then a degree-1 tie.
        let star = SmallGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let p = Pattern::new("star", star).unwrap();
        assert_eq!(p.order(), &[3, 0, 2, 1]);
        assert_eq!(p.elimination_degrees(), vec![1, 1, 1, 0]);
        assert_eq!(p.order_degeneracy(), 1);
    }

    #[test]
    fn without_vertex_matches_vec_remove() {
        let c5 = SmallGraph::cycle(5);
        let p4 = c5.without_vertex(2);
        // 0-1, (2 gone), 3-4 becomes 2-3, 4-0 becomes 3-0
        assert_eq!(p4.edges(), vec![(0, 1), (0, 3), (2, 3)]);
        let p = Pattern::builtin("c5").unwrap();
        let q = p.without_eliminated();
        assert_eq!(q.vertex_count(), 4);
        assert_eq!(q.edge_count(), 3);
        assert!(validate_elimination_order(4, &q.edges(), q.order()).valid);
    }

    #[test]
    fn petersen_is_triangle_free() {
        let g = SmallGraph::petersen();
        assert_eq!(g.edge_count(), 15);
        assert!((0..10).all(|v| g.degree(v) == 3));
        assert!(g.is_triangle_free());
    }
}
