//! Exact counting of canonical and labeled pattern copies.
//!
//! Counts run as variable elimination over the pattern vertices: each
//! elimination step sums a candidate vertex out of a small table, and the
//! candidates are produced by intersecting adjacency bit rows. When an
//! intermediate table would be too large the engine falls back to plain
//! bit-row backtracking. Both routes are exact and agree on every input.

use std::collections::{BTreeMap, HashMap};

use num::{BigInt, BigRational, BigUint, One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::parts::{size_product, InflationCertificate, PartSystem};
use crate::pattern::{mask_iter, Pattern, SmallGraph};

/// Largest intermediate table the elimination route may build.
const TABLE_LIMIT: u128 = 1 << 22;
/// Cells below which a table is filled sequentially.
const PAR_CELLS: usize = 2048;
/// Largest `|A|` for which the auxiliary bipartite degrees are materialized.
pub const GAMMA_GUARD: u128 = 10_000_000;

/// Exact canonical-copy count, optionally with per-vertex through-counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalCountResult {
    pub count: BigUint,
    /// Number of canonical copies using each vertex of the parts.
    pub per_part_degrees: Option<BTreeMap<usize, BigUint>>,
}

/// Which counting route to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMethod {
    /// Elimination when its tables fit, otherwise backtracking.
    Auto,
    Elimination,
    Backtracking,
}

/// A table's data, `(scope position, stride)` per other variable, and the
/// stride of the variable being summed out.
type TableAccess<'a> = (&'a [u128], Vec<(usize, usize)>, usize);

#[derive(Clone, Debug)]
struct Table {
    scope: Vec<usize>,
    dims: Vec<usize>,
    data: Vec<u128>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

fn decode(mut idx: usize, dims: &[usize], alpha: &mut [usize]) {
    for j in (0..dims.len()).rev() {
        alpha[j] = idx % dims[j];
        idx /= dims[j];
    }
}

/// A homomorphism-counting problem: pattern adjacency plus one domain per
/// pattern vertex. Domains may overlap.
struct Engine<'a> {
    g: &'a Graph,
    adj: Vec<u64>,
    doms: Vec<BitSet>,
    lists: Vec<Vec<usize>>,
    local: Vec<Vec<u32>>,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Graph, adj: Vec<u64>, doms: Vec<BitSet>) -> Self {
        let n = g.vertex_count();
        let lists: Vec<Vec<usize>> = doms.iter().map(BitSet::to_vec).collect();
        let local = lists
            .iter()
            .map(|l| {
                let mut m = vec![u32::MAX; n];
                for (i, &x) in l.iter().enumerate() {
                    m[x] = i as u32;
                }
                m
            })
            .collect();
        Self {
            g,
            adj,
            doms,
            lists,
            local,
        }
    }

    fn h(&self) -> usize {
        self.adj.len()
    }

    fn all(&self) -> u64 {
        if self.h() == 64 {
            u64::MAX
        } else {
            (1u64 << self.h()) - 1
        }
    }

    fn dim(&self, v: usize) -> usize {
        self.lists[v].len()
    }

    fn cells(&self, mask: u64) -> u128 {
        mask_iter(mask).fold(1u128, |acc, v| acc.saturating_mul(self.dim(v) as u128))
    }

    /// Checks that every partial count fits in `u128`.
    fn check_overflow(&self) -> Result<()> {
        let total = self
            .lists
            .iter()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.len()));
        if total.bits() > 127 {
            return Err(Error::GuardExceeded(
                "product of part sizes exceeds 2^127".into(),
            ));
        }
        Ok(())
    }

    /// Greedy elimination order for every variable outside `keep`, or `None`
    /// when some table would exceed the size limit.
    fn plan(&self, keep: u64) -> Option<Vec<usize>> {
        let mut alive = self.all();
        let mut scopes: Vec<u64> = Vec::new();
        let mut order = Vec::new();
        while alive & !keep != 0 {
            let mut best: Option<(u128, u128, usize, u64)> = None;
            for v in mask_iter(alive & !keep) {
                let bit = 1u64 << v;
                let mut sc = self.adj[v] & alive;
                for &s in &scopes {
                    if s & bit != 0 {
                        sc |= s;
                    }
                }
                sc &= !bit;
                let size = self.cells(sc);
                let cost = size.saturating_mul(self.dim(v).max(1) as u128);
                if best.is_none_or(|(c, s, _, _)| (cost, size) < (c, s)) {
                    best = Some((cost, size, v, sc));
                }
            }
            let (_, size, v, sc) = best.expect("a variable remains");
            if size > TABLE_LIMIT {
                return None;
            }
            let bit = 1u64 << v;
            scopes.retain(|s| s & bit == 0);
            scopes.push(sc);
            alive &= !bit;
            order.push(v);
        }
        (self.cells(keep) <= TABLE_LIMIT).then_some(order)
    }

    fn eliminate(&self, v: usize, alive: u64, tables: &mut Vec<Table>) {
        let bit = 1u64 << v;
        let nbrs: Vec<usize> = mask_iter(self.adj[v] & alive & !bit).collect();
        let (inv, rest): (Vec<Table>, Vec<Table>) =
            tables.drain(..).partition(|t| t.scope.contains(&v));
        *tables = rest;

        let mut scope_mask = nbrs.iter().fold(0u64, |m, &u| m | (1 << u));
        for t in &inv {
            for &u in &t.scope {
                scope_mask |= 1 << u;
            }
        }
        scope_mask &= !bit;
        let scope: Vec<usize> = mask_iter(scope_mask).collect();
        let dims: Vec<usize> = scope.iter().map(|&u| self.dim(u)).collect();
        let pos = |u: usize| scope.iter().position(|&w| w == u).expect("in scope");
        let nbr_pos: Vec<(usize, usize)> = nbrs.iter().map(|&u| (u, pos(u))).collect();

        let access: Vec<TableAccess<'_>> = inv
            .iter()
            .map(|t| {
                let st = strides(&t.dims);
                let mut parts = Vec::new();
                let mut vstride = 0;
                for (j, &u) in t.scope.iter().enumerate() {
                    if u == v {
                        vstride = st[j];
                    } else {
                        parts.push((pos(u), st[j]));
                    }
                }
                (t.data.as_slice(), parts, vstride)
            })
            .collect();

        let n = self.g.vertex_count();
        let dim_v = self.dim(v);
        // With a single table, dense candidate sets are summed as the row
        // total minus the excluded entries.
        let rowsum: Option<Vec<u128>> = match access.as_slice() {
            [(data, _, vs)] if !nbr_pos.is_empty() => {
                let mut sums = vec![0u128; data.len()];
                for (idx, &x) in data.iter().enumerate() {
                    sums[idx - (idx / vs % dim_v) * vs] += x;
                }
                Some(sums)
            }
            _ => None,
        };
        let cells: usize = dims.iter().product();
        let compute = |idx: usize, scratch: &mut (BitSet, BitSet), alpha: &mut Vec<usize>| -> u128 {
            decode(idx, &dims, alpha);
            let (cand_buf, rest_buf) = scratch;
            let cand: &BitSet = match nbr_pos.split_first() {
                None => &self.doms[v],
                Some((&(u0, p0), more)) => {
                    cand_buf.assign_intersection(
                        &self.doms[v],
                        self.g.neighbors(self.lists[u0][alpha[p0]]),
                    );
                    for &(u, p) in more {
                        cand_buf.intersect_with(self.g.neighbors(self.lists[u][alpha[p]]));
                    }
                    cand_buf
                }
            };
            if access.is_empty() {
                return cand.count() as u128;
            }
            let local = &self.local[v];
            if let (Some(sums), [(data, parts, vs)]) = (&rowsum, access.as_slice()) {
                let base: usize = parts.iter().map(|&(p, s)| alpha[p] * s).sum();
                if 2 * cand.count() > dim_v {
                    rest_buf.assign(&self.doms[v]);
                    rest_buf.difference_with(cand);
                    let excluded: u128 = rest_buf
                        .iter()
                        .map(|x| data[base + vs * local[x] as usize])
                        .sum();
                    return sums[base] - excluded;
                }
                return cand
                    .iter()
                    .map(|x| data[base + vs * local[x] as usize])
                    .sum();
            }
            let bases: Vec<usize> = access
                .iter()
                .map(|(_, parts, _)| parts.iter().map(|&(p, s)| alpha[p] * s).sum())
                .collect();
            let term = |lx: usize| -> u128 {
                let mut prod = 1u128;
                for ((data, _, vs), &b) in access.iter().zip(&bases) {
                    prod *= data[b + vs * lx];
                    if prod == 0 {
                        break;
                    }
                }
                prod
            };
            if nbr_pos.is_empty() {
                (0..dim_v).map(term).sum()
            } else {
                cand.iter().map(|x| term(local[x] as usize)).sum()
            }
        };

        let mut data = vec![0u128; cells];
        let fresh = || ((BitSet::new(n), BitSet::new(n)), vec![0usize; dims.len()]);
        if cells >= PAR_CELLS {
            data.par_iter_mut().enumerate().with_min_len(64).for_each_init(
                fresh,
                |(scratch, alpha), (i, out)| *out = compute(i, scratch, alpha),
            );
        } else {
            let (mut scratch, mut alpha) = fresh();
            for (i, out) in data.iter_mut().enumerate() {
                *out = compute(i, &mut scratch, &mut alpha);
            }
        }
        tables.push(Table { scope, dims, data });
    }

    /// Table over the variables of `keep` (ascending), following `order`.
    fn run(&self, keep: u64, order: &[usize]) -> Table {
        let mut alive = self.all();
        let mut tables: Vec<Table> = Vec::new();
        for &v in order {
            self.eliminate(v, alive, &mut tables);
            alive &= !(1u64 << v);
        }
        let scope: Vec<usize> = mask_iter(keep).collect();
        let dims: Vec<usize> = scope.iter().map(|&u| self.dim(u)).collect();
        let edges: Vec<(usize, usize)> = scope
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| {
                scope[i + 1..]
                    .iter()
                    .enumerate()
                    .filter(move |&(_, &b)| self.adj[a] >> b & 1 == 1)
                    .map(move |(j, _)| (i, i + 1 + j))
            })
            .collect();
        let access: Vec<(&Table, Vec<(usize, usize)>)> = tables
            .iter()
            .map(|t| {
                let st = strides(&t.dims);
                let parts = t
                    .scope
                    .iter()
                    .enumerate()
                    .map(|(j, u)| (scope.iter().position(|w| w == u).expect("kept"), st[j]))
                    .collect();
                (t, parts)
            })
            .collect();
        let cells: usize = dims.iter().product();
        let mut alpha = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(cells);
        for idx in 0..cells {
            decode(idx, &dims, &mut alpha);
            let ok = edges.iter().all(|&(i, j)| {
                self.g
                    .has_edge(self.lists[scope[i]][alpha[i]], self.lists[scope[j]][alpha[j]])
            });
            let mut prod = u128::from(ok);
            for (t, parts) in &access {
                if prod == 0 {
                    break;
                }
                let off: usize = parts.iter().map(|&(p, s)| alpha[p] * s).sum();
                prod *= t.data[off];
            }
            data.push(prod);
        }
        Table { scope, dims, data }
    }

    fn marginal(&self, keep: u64) -> Option<Table> {
        let order = self.plan(keep)?;
        Some(self.run(keep, &order))
    }

    /// Visiting order for backtracking: start at a maximum-degree vertex, then
    /// repeatedly take the vertex with most visited neighbours.
    fn visit_order(&self) -> Vec<usize> {
        let h = self.h();
        let mut seen = 0u64;
        let mut order = Vec::with_capacity(h);
        for _ in 0..h {
            let v = (0..h)
                .filter(|&v| seen >> v & 1 == 0)
                .max_by_key(|&v| {
                    (
                        (self.adj[v] & seen).count_ones(),
                        self.adj[v].count_ones(),
                        std::cmp::Reverse(v),
                    )
                })
                .expect("unvisited vertex");
            seen |= 1 << v;
            order.push(v);
        }
        order
    }

    fn candidates(
        &self,
        order: &[usize],
        depth: usize,
        assign: &[usize],
        used: Option<&BitSet>,
        out: &mut BitSet,
    ) {
        let v = order[depth];
        out.assign(&self.doms[v]);
        for &u in &order[..depth] {
            if self.adj[v] >> u & 1 == 1 {
                out.intersect_with(self.g.neighbors(assign[u]));
            }
        }
        if let Some(used) = used {
            out.difference_with(used);
        }
    }

    fn count_from(
        &self,
        order: &[usize],
        depth: usize,
        assign: &mut [usize],
        used: &mut Option<BitSet>,
        bufs: &mut [BitSet],
    ) -> u128 {
        let (cand, deeper) = bufs.split_first_mut().expect("buffer per depth");
        self.candidates(order, depth, assign, used.as_ref(), cand);
        if depth + 1 == order.len() {
            return cand.count() as u128;
        }
        let v = order[depth];
        let mut total = 0u128;
        for x in cand.iter() {
            assign[v] = x;
            if let Some(u) = used.as_mut() {
                u.insert(x);
            }
            total += self.count_from(order, depth + 1, assign, used, deeper);
            if let Some(u) = used.as_mut() {
                u.remove(x);
            }
        }
        total
    }

    fn backtrack_count(&self, injective: bool) -> u128 {
        let h = self.h();
        if h == 0 {
            return 1;
        }
        let n = self.g.vertex_count();
        let order = self.visit_order();
        let first = order[0];
        if h == 1 {
            return self.dim(first) as u128;
        }
        self.lists[first]
            .par_iter()
            .map(|&x| {
                let mut assign = vec![0usize; h];
                assign[first] = x;
                let mut used = injective.then(|| BitSet::from_indices(n, [x]));
                let mut bufs = vec![BitSet::new(n); h];
                self.count_from(&order, 1, &mut assign, &mut used, &mut bufs[1..])
            })
            .sum()
    }

    fn tally_from(
        &self,
        order: &[usize],
        depth: usize,
        assign: &mut [usize],
        bufs: &mut [BitSet],
        tally: &mut [Vec<u128>],
    ) -> u128 {
        let (cand, deeper) = bufs.split_first_mut().expect("buffer per depth");
        self.candidates(order, depth, assign, None, cand);
        if depth + 1 == order.len() {
            let v = order[depth];
            for x in cand.iter() {
                tally[v][x] += 1;
            }
            return cand.count() as u128;
        }
        let v = order[depth];
        let mut total = 0u128;
        for x in cand.iter() {
            assign[v] = x;
            let c = self.tally_from(order, depth + 1, assign, deeper, tally);
            tally[v][x] += c;
            total += c;
        }
        total
    }

    /// Through-counts per variable and vertex, by backtracking.
    fn backtrack_tally(&self) -> Vec<Vec<u128>> {
        let h = self.h();
        let n = self.g.vertex_count();
        let mut tally = vec![vec![0u128; n]; h];
        if h > 0 {
            let order = self.visit_order();
            let mut assign = vec![0usize; h];
            let mut bufs = vec![BitSet::new(n); h];
            self.tally_from(&order, 0, &mut assign, &mut bufs, &mut tally);
        }
        tally
    }

    fn first_from(
        &self,
        order: &[usize],
        depth: usize,
        assign: &mut [usize],
        used: &mut Option<BitSet>,
        bufs: &mut [BitSet],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let (cand, deeper) = bufs.split_first_mut().expect("buffer per depth");
        self.candidates(order, depth, assign, used.as_ref(), cand);
        let v = order[depth];
        for x in cand.iter() {
            assign[v] = x;
            if let Some(u) = used.as_mut() {
                u.insert(x);
            }
            if self.first_from(order, depth + 1, assign, used, deeper) {
                return true;
            }
            if let Some(u) = used.as_mut() {
                u.remove(x);
            }
        }
        false
    }

    fn first(&self, injective: bool) -> Option<Vec<usize>> {
        let h = self.h();
        let n = self.g.vertex_count();
        let order = self.visit_order();
        let mut assign = vec![0usize; h];
        let mut used = injective.then(|| BitSet::new(n));
        let mut bufs = vec![BitSet::new(n); h];
        self.first_from(&order, 0, &mut assign, &mut used, &mut bufs)
            .then_some(assign)
    }

    fn count(&self, method: CountMethod) -> Result<u128> {
        self.check_overflow()?;
        match method {
            CountMethod::Backtracking => Ok(self.backtrack_count(false)),
            CountMethod::Elimination => self
                .marginal(0)
                .map(|t| t.data[0])
                .ok_or_else(|| Error::GuardExceeded("elimination tables too large".into())),
            CountMethod::Auto => Ok(match self.marginal(0) {
                Some(t) => t.data[0],
                None => self.backtrack_count(false),
            }),
        }
    }
}

fn adjacency(pattern: &SmallGraph) -> Vec<u64> {
    (0..pattern.vertex_count())
        .map(|v| pattern.neighbor_mask(v))
        .collect()
}

fn check_parts(g: &Graph, pattern: &SmallGraph, parts: &[BitSet]) -> Result<()> {
    if parts.len() != pattern.vertex_count() {
        return Err(Error::InvalidInput(format!(
            "pattern has {} vertices but {} parts were given",
            pattern.vertex_count(),
            parts.len()
        )));
    }
    let n = g.vertex_count();
    if let Some(i) = parts.iter().position(|p| p.universe() != n) {
        return Err(Error::InvalidInput(format!("part {i} is not a set of graph vertices")));
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if !parts[i].is_disjoint(&parts[j]) {
                return Err(Error::InvalidInput(format!("parts {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

/// Number of tuples `(v_1..v_h)` in `V_1 × … × V_h` that map every pattern
/// edge onto a graph edge.
pub fn count_canonical_copies(
    g: &Graph,
    pattern: &SmallGraph,
    parts: &[BitSet],
) -> Result<CanonicalCountResult> {
    count_canonical_by(g, pattern, parts, CountMethod::Auto)
}

pub fn count_canonical_by(
    g: &Graph,
    pattern: &SmallGraph,
    parts: &[BitSet],
    method: CountMethod,
) -> Result<CanonicalCountResult> {
    check_parts(g, pattern, parts)?;
    let engine = Engine::new(g, adjacency(pattern), parts.to_vec());
    Ok(CanonicalCountResult {
        count: BigUint::from(engine.count(method)?),
        per_part_degrees: None,
    })
}

/// Canonical count together with the number of copies through every vertex.
pub fn count_canonical_with_degrees(
    g: &Graph,
    pattern: &SmallGraph,
    parts: &[BitSet],
) -> Result<CanonicalCountResult> {
    check_parts(g, pattern, parts)?;
    let engine = Engine::new(g, adjacency(pattern), parts.to_vec());
    engine.check_overflow()?;
    let h = pattern.vertex_count();
    let mut degrees = BTreeMap::new();
    let mut count = 0u128;
    let marginals: Option<Vec<Table>> = (0..h).map(|i| engine.marginal(1 << i)).collect();
    match marginals {
        Some(tables) => {
            for (i, t) in tables.iter().enumerate() {
                for (lx, &c) in t.data.iter().enumerate() {
                    degrees.insert(engine.lists[i][lx], BigUint::from(c));
                }
            }
            count = tables.first().map_or(1, |t| t.data.iter().sum());
        }
        None => {
            let tally = engine.backtrack_tally();
            for (i, row) in tally.iter().enumerate() {
                for &x in &engine.lists[i] {
                    degrees.insert(x, BigUint::from(row[x]));
                }
            }
            if let Some(first) = engine.lists.first() {
                count = first.iter().map(|&x| tally[0][x]).sum();
            }
        }
    }
    if h == 0 {
        count = 1;
    }
    Ok(CanonicalCountResult {
        count: BigUint::from(count),
        per_part_degrees: Some(degrees),
    })
}

/// Exact density certificate for a part system.
pub fn inflation_density(
    g: &Graph,
    pattern: &SmallGraph,
    parts: &[BitSet],
) -> Result<InflationCertificate> {
    let system = PartSystem::new(parts.to_vec())?;
    let count = count_canonical_copies(g, pattern, parts)?.count;
    Ok(InflationCertificate::new(system, count))
}

/// Some canonical copy, as one graph vertex per pattern vertex.
pub fn find_canonical_copy(g: &Graph, pattern: &SmallGraph, parts: &[BitSet]) -> Result<Option<Vec<usize>>> {
    check_parts(g, pattern, parts)?;
    Ok(Engine::new(g, adjacency(pattern), parts.to_vec()).first(false))
}

/// Some injective edge-preserving map from the pattern into the graph.
pub fn find_labeled_copy(g: &Graph, pattern: &SmallGraph) -> Option<Vec<usize>> {
    let doms = vec![g.all_vertices(); pattern.vertex_count()];
    Engine::new(g, adjacency(pattern), doms).first(true)
}

/// Set partitions of `0..h` into pattern-independent blocks, as block masks.
fn independent_partitions(pattern: &SmallGraph) -> Vec<Vec<u64>> {
    fn rec(v: usize, pattern: &SmallGraph, blocks: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if v == pattern.vertex_count() {
            out.push(blocks.clone());
            return;
        }
        let nb = pattern.neighbor_mask(v);
        for i in 0..blocks.len() {
            if blocks[i] & nb == 0 {
                blocks[i] |= 1 << v;
                rec(v + 1, pattern, blocks, out);
                blocks[i] &= !(1 << v);
            }
        }
        blocks.push(1 << v);
        rec(v + 1, pattern, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    rec(0, pattern, &mut Vec::new(), &mut out);
    out
}

fn factorial(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

/// Number of injective maps `V(H) → V(G)` sending pattern edges to graph
/// edges. Non-edges of the pattern are unconstrained, so this is the number
/// of labeled (not necessarily induced) copies; unlabeled copies are this
/// divided by the pattern's automorphism count.
pub fn count_labeled_copies(g: &Graph, pattern: &SmallGraph) -> Result<BigUint> {
    count_labeled_by(g, pattern, CountMethod::Auto)
}

pub fn count_labeled_by(g: &Graph, pattern: &SmallGraph, method: CountMethod) -> Result<BigUint> {
    let h = pattern.vertex_count();
    let full = || vec![g.all_vertices(); h];
    let direct = || -> Result<BigUint> {
        let engine = Engine::new(g, adjacency(pattern), full());
        engine.check_overflow()?;
        Ok(BigUint::from(engine.backtrack_count(true)))
    };
    if method == CountMethod::Backtracking || h > 7 {
        return direct();
    }
    // Möbius inversion over the partition lattice: injective maps are the
    // alternating sum of homomorphism counts of the quotient patterns.
    let mut total = BigInt::zero();
    for blocks in independent_partitions(pattern) {
        let b = blocks.len();
        let adj: Vec<u64> = blocks
            .iter()
            .map(|&mask| {
                let nb = mask_iter(mask).fold(0u64, |m, v| m | pattern.neighbor_mask(v));
                blocks
                    .iter()
                    .enumerate()
                    .filter(|&(_, &other)| other & nb != 0)
                    .fold(0u64, |m, (j, _)| m | (1 << j))
            })
            .collect();
        let engine = Engine::new(g, adj, vec![g.all_vertices(); b]);
        engine.check_overflow()?;
        let hom = match (engine.marginal(0), method) {
            (Some(t), _) => t.data[0],
            (None, CountMethod::Elimination) => {
                return Err(Error::GuardExceeded("elimination tables too large".into()))
            }
            (None, _) => return direct(),
        };
        let mut mu = BigInt::one();
        for &mask in &blocks {
            let size = mask.count_ones() as u64;
            mu *= factorial(size - 1);
            if size.is_multiple_of(2) {
                mu = -mu;
            }
        }
        total += mu * BigInt::from(hom);
    }
    total
        .to_biguint()
        .ok_or_else(|| Error::InvariantViolation("negative labeled count".into()))
}

/// Degrees in the auxiliary bipartite graph between `A = ∏_{i∈N(h)} V_i` and
/// `B = ∏_{i∉N(h)} V_i`, where `h` is the pattern's eliminated vertex. A pair
/// `(a, b)` is adjacent when together they form a canonical copy.
#[derive(Clone, Debug)]
pub struct GammaDegrees {
    /// Pattern vertices indexing `A`, ascending.
    pub a_vars: Vec<usize>,
    /// Pattern vertices indexing `B`, ascending (includes the eliminated vertex).
    pub b_vars: Vec<usize>,
    /// Sorted vertex list of each `a_vars` part.
    pub a_lists: Vec<Vec<usize>>,
    /// Row-major degrees over `A`, last coordinate fastest.
    pub degrees: Vec<u128>,
    pub a_size: u128,
    pub b_size: BigUint,
}

impl GammaDegrees {
    /// Degree of the tuple `a` given as graph vertices in `a_vars` order.
    pub fn degree_of(&self, a: &[usize]) -> Option<u128> {
        let mut idx = 0usize;
        for (list, &x) in self.a_lists.iter().zip(a) {
            idx = idx * list.len() + list.binary_search(&x).ok()?;
        }
        Some(self.degrees[idx])
    }

    /// The tuple of graph vertices at a row-major index.
    pub fn tuple_at(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.a_lists.len()];
        for j in (0..self.a_lists.len()).rev() {
            let len = self.a_lists[j].len();
            out[j] = self.a_lists[j][idx % len];
            idx /= len;
        }
        out
    }

    /// `e(Γ)`, which is the canonical-copy count.
    pub fn edge_count(&self) -> BigUint {
        self.degrees.iter().map(|&d| BigUint::from(d)).sum()
    }

    /// `e(Γ) / (|A||B|)`.
    pub fn density(&self) -> BigRational {
        let denom = BigUint::from(self.a_size) * &self.b_size;
        BigRational::new(self.edge_count().into(), denom.into())
    }

    /// `Σ_a (d(a)/|B|)^s`.
    pub fn moment(&self, s: u32) -> BigRational {
        let mut groups: HashMap<u128, u64> = HashMap::new();
        for &d in &self.degrees {
            if d > 0 {
                *groups.entry(d).or_default() += 1;
            }
        }
        let mut keys: Vec<_> = groups.into_iter().collect();
        keys.sort_unstable();
        let num: BigUint = keys
            .into_iter()
            .map(|(d, c)| BigUint::from(d).pow(s) * BigUint::from(c))
            .sum();
        BigRational::new(num.into(), self.b_size.pow(s).into())
    }
}

pub fn gamma_degrees(g: &Graph, pattern: &Pattern, parts: &[BitSet]) -> Result<GammaDegrees> {
    check_parts(g, pattern, parts)?;
    let last = pattern.eliminated();
    let a_mask = pattern.neighbor_mask(last);
    let a_vars: Vec<usize> = mask_iter(a_mask).collect();
    if a_vars.is_empty() {
        return Err(Error::Precondition(
            "the eliminated vertex is isolated, so the auxiliary graph is empty-sided".into(),
        ));
    }
    let b_vars: Vec<usize> = (0..pattern.vertex_count())
        .filter(|&v| a_mask >> v & 1 == 0)
        .collect();
    let a_size = a_vars
        .iter()
        .fold(1u128, |acc, &i| acc.saturating_mul(parts[i].count() as u128));
    if a_size > GAMMA_GUARD {
        return Err(Error::GuardExceeded(format!(
            "|A| = {a_size} exceeds {GAMMA_GUARD}"
        )));
    }
    let engine = Engine::new(g, adjacency(pattern), parts.to_vec());
    engine.check_overflow()?;
    let table = engine.marginal(a_mask).ok_or_else(|| {
        Error::GuardExceeded("auxiliary degrees need oversized elimination tables".into())
    })?;
    let b_parts: Vec<BitSet> = b_vars.iter().map(|&i| parts[i].clone()).collect();
    Ok(GammaDegrees {
        a_lists: a_vars.iter().map(|&i| engine.lists[i].clone()).collect(),
        a_vars,
        b_vars,
        degrees: table.data,
        a_size,
        b_size: size_product(&b_parts),
    })
}

/// `Σ_{a∈A} (d_Γ(a)/|B|)^s`, the expected number of `A`-tuples adjacent to
/// all of `s` independent uniform samples from `B`.
pub fn expected_common_neighborhood_size(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    s: u32,
) -> Result<BigRational> {
    if s == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    Ok(gamma_degrees(g, pattern, parts)?.moment(s))
}

/// Number of vertices per part as `u64`, for quick size arithmetic.
pub fn part_sizes(parts: &[BitSet]) -> Vec<u64> {
    parts.iter().map(|p| p.count() as u64).collect()
}

/// Convenience: the canonical count as a `u128` when it fits.
pub fn canonical_count_u128(g: &Graph, pattern: &SmallGraph, parts: &[BitSet]) -> Result<u128> {
    let c = count_canonical_copies(g, pattern, parts)?.count;
    c.to_u128()
        .ok_or_else(|| Error::GuardExceeded("count exceeds u128".into()))
}
