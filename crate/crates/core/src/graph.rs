//! Undirected simple graphs with one adjacency bit row per vertex.

use std::io::{BufRead, Write};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// An immutable undirected simple graph on vertices `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    rows: Vec<BitSet>,
    edge_count: usize,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, m={})", self.vertex_count(), self.edge_count)
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            rows: vec![BitSet::new(n); n],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let rows = (0..n)
            .map(|v| {
                let mut r = BitSet::full(n);
                r.remove(v);
                r
            })
            .collect();
        Self {
            rows,
            edge_count: n * n.saturating_sub(1) / 2,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse; loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u},{v}) out of range for {n} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("loop at vertex {u}")));
            }
            g.insert_edge(u, v);
        }
        Ok(g)
    }

    /// Builds a graph from per-vertex rows. Rows must be symmetric and loop-free.
    pub(crate) fn from_rows(rows: Vec<BitSet>) -> Self {
        let n = rows.len();
        debug_assert!(rows.iter().all(|r| r.universe() == n));
        debug_assert!((0..n).all(|v| !rows[v].contains(v)));
        debug_assert!((0..n).all(|u| rows[u].iter().all(|v| rows[v].contains(u))));
        let edge_count = rows.iter().map(BitSet::count).sum::<usize>() / 2;
        Self { rows, edge_count }
    }

    fn insert_edge(&mut self, u: usize, v: usize) {
        if !self.rows[u].contains(v) {
            self.rows[u].insert(v);
            self.rows[v].insert(u);
            self.edge_count += 1;
        }
    }

    /// A copy of this graph with edge `uv` added.
    pub fn with_edge(&self, u: usize, v: usize) -> Self {
        assert!(u != v && u < self.vertex_count() && v < self.vertex_count());
        let mut g = self.clone();
        g.insert_edge(u, v);
        g
    }

    /// A copy of this graph with edge `uv` removed.
    pub fn without_edge(&self, u: usize, v: usize) -> Self {
        let mut g = self.clone();
        if g.rows[u].contains(v) {
            g.rows[u].remove(v);
            g.rows[v].remove(u);
            g.edge_count -= 1;
        }
        g
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.rows[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].count()
    }

    /// Number of neighbours of `v` inside `set`.
    #[inline]
    pub fn degree_into(&self, v: usize, set: &BitSet) -> usize {
        self.rows[v].intersection_count(set)
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }

    pub fn all_vertices(&self) -> BitSet {
        BitSet::full(self.vertex_count())
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Number of edges with both endpoints in `set`.
    pub fn edges_within(&self, set: &BitSet) -> usize {
        set.iter().map(|v| self.rows[v].intersection_count(set)).sum::<usize>() / 2
    }

    /// Intersection of the neighbourhoods of every vertex in `vertices`.
    pub fn common_neighborhood(&self, vertices: &[usize]) -> Result<BitSet> {
        let (&first, rest) = vertices
            .split_first()
            .ok_or_else(|| Error::InvalidInput("common neighbourhood of an empty set".into()))?;
        let mut acc = self.rows[first].clone();
        for &v in rest {
            acc.intersect_with(&self.rows[v]);
        }
        Ok(acc)
    }

    /// Reads the `n m` / `u v` edge-list format. `#` starts a comment.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let parsed = parse_edge_list(reader)?;
        let mut g = Self::empty(parsed.n);
        for (u, v) in parsed.edges {
            g.insert_edge(u, v);
        }
        Ok(g)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vertex_count(), self.edge_count)?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Raw contents of an edge-list file.
pub(crate) struct EdgeList {
    pub n: usize,
    pub name: Option<String>,
    pub edges: Vec<(usize, usize)>,
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        let body = line.split('#').next().unwrap_or("").trim().to_string();
        (!body.is_empty()).then_some(Ok((i + 1, body)))
    })
}

fn parse_index(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("{what} `{tok}` is not a nonnegative integer")))
}

pub(crate) fn parse_edge_list<R: BufRead>(reader: R) -> Result<EdgeList> {
    let mut lines = content_lines(reader);
    let (hline, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(1, "missing header `n m`"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 2 || toks.len() > 3 {
        return Err(Error::parse(hline, "header must be `n m` or `n m name`"));
    }
    let n = parse_index(toks[0], hline, "vertex count")?;
    let m = parse_index(toks[1], hline, "edge count")?;
    let name = toks.get(2).map(|s| s.to_string());

    let mut edges = Vec::with_capacity(m);
    for item in lines {
        let (line, body) = item?;
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::parse(line, "edge line must be `u v`"));
        }
        let u = parse_index(toks[0], line, "vertex")?;
        let v = parse_index(toks[1], line, "vertex")?;
        if u >= n || v >= n {
            return Err(Error::parse(
                line,
                format!("vertex index out of range: {u} {v} (n = {n})"),
            ));
        }
        if u == v {
            return Err(Error::parse(line, format!("loop edge at vertex {u}")));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::parse(
            hline,
            format!("header declares {m} edges but {} were listed", edges.len()),
        ));
    }
    Ok(EdgeList { n, name, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_nonempty_graph() {
        let g = Graph::parse("2 1\n0 1").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn zero_edge_graph() {
        let g = Graph::parse("3 0").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn four_cycle_degrees() {
        let g = Graph::parse("4 4\n0 1\n1 2\n2 3\n3 0").unwrap();
        for v in 0..4 {
            assert_eq!(g.degree(v), 2);
        }
        for (u, v) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            assert!(g.has_edge(u, v) && g.has_edge(v, u));
        }
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn comments_and_duplicates() {
        let g = Graph::parse("# a triangle\n3 4\n0 1 # first\n1 2\n2 0\n1 0\n").unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Graph::parse("3 2\n0 1\n1 x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Graph::parse("3 1\n0 3").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Graph::parse("3 1\n\n2 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Graph::parse("3 2\n0 1").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn common_neighborhood_examples() {
        let k4 = Graph::complete(4);
        assert_eq!(k4.common_neighborhood(&[0, 1]).unwrap().to_vec(), vec![2, 3]);
        let c4 = Graph::parse("4 4\n0 1\n1 2\n2 3\n3 0").unwrap();
        assert_eq!(c4.common_neighborhood(&[0, 2]).unwrap().to_vec(), vec![1, 3]);
        assert_eq!(c4.common_neighborhood(&[3]).unwrap(), *c4.neighbors(3));
        assert!(c4.common_neighborhood(&[]).is_err());
    }

    #[test]
    fn write_round_trip() {
        let g = Graph::parse("5 3\n0 4\n1 2\n3 1").unwrap();
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        assert_eq!(Graph::read(buf.as_slice()).unwrap(), g);
    }
}
