//! Edge colorings of complete graphs.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// A `q`-coloring of the edges of `K_N`, one byte per unordered pair.
/// Per-color graphs are built on first use.
#[derive(Clone, Debug)]
pub struct Coloring {
    n: usize,
    q: usize,
    colors: Vec<u8>,
    classes: Vec<OnceLock<Graph>>,
}

impl PartialEq for Coloring {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.q == other.q && self.colors == other.colors
    }
}

impl Eq for Coloring {}

fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

impl Coloring {
    /// Colors every pair `u < v` with `f(u, v)`.
    pub fn from_fn(n: usize, q: usize, mut f: impl FnMut(usize, usize) -> usize) -> Result<Self> {
        if q == 0 || q > 256 {
            return Err(Error::InvalidInput(format!("color count {q} must be in 1..=256")));
        }
        let mut colors = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                let c = f(u, v);
                if c >= q {
                    return Err(Error::InvalidInput(format!(
                        "pair ({u},{v}) has color {c} outside 0..{q}"
                    )));
                }
                colors.push(c as u8);
            }
        }
        Ok(Self::from_parts(n, q, colors))
    }

    fn from_parts(n: usize, q: usize, colors: Vec<u8>) -> Self {
        Self {
            n,
            q,
            colors,
            classes: (0..q).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn monochromatic(n: usize, q: usize, color: usize) -> Result<Self> {
        Self::from_fn(n, q, |_, _| color)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn color_count(&self) -> usize {
        self.q
    }

    pub fn color(&self, u: usize, v: usize) -> usize {
        assert!(u != v && u < self.n && v < self.n, "invalid pair ({u},{v})");
        self.colors[pair_index(self.n, u, v)] as usize
    }

    /// The graph of edges with color `c`.
    pub fn class_graph(&self, c: usize) -> &Graph {
        self.classes[c].get_or_init(|| {
            let n = self.n;
            let mut rows = vec![BitSet::new(n); n];
            let mut idx = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if self.colors[idx] as usize == c {
                        rows[u].insert(v);
                        rows[v].insert(u);
                    }
                    idx += 1;
                }
            }
            Graph::from_rows(rows)
        })
    }

    /// Number of edges of every color.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.q];
        for &c in &self.colors {
            out[c as usize] += 1;
        }
        out
    }

    /// Reads `N q` followed by one `u v c` line per unordered pair.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut colors: Vec<u8> = Vec::new();
        let mut seen: Vec<bool> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            let num = |t: &str| -> Result<usize> {
                t.parse()
                    .map_err(|_| Error::parse(lineno, format!("`{t}` is not a nonnegative integer")))
            };
            match header {
                None => {
                    if toks.len() != 2 {
                        return Err(Error::parse(lineno, "header must be `N q`"));
                    }
                    let (n, q) = (num(toks[0])?, num(toks[1])?);
                    if q == 0 || q > 256 {
                        return Err(Error::parse(lineno, "color count must be in 1..=256"));
                    }
                    let pairs = n * n.saturating_sub(1) / 2;
                    colors = vec![0; pairs];
                    seen = vec![false; pairs];
                    header = Some((n, q, lineno));
                }
                Some((n, q, _)) => {
                    if toks.len() != 3 {
                        return Err(Error::parse(lineno, "pair line must be `u v c`"));
                    }
                    let (u, v, c) = (num(toks[0])?, num(toks[1])?, num(toks[2])?);
                    if u >= n || v >= n {
                        return Err(Error::parse(lineno, format!("vertex out of range: {u} {v}")));
                    }
                    if u == v {
                        return Err(Error::parse(lineno, format!("self-pair at vertex {u}")));
                    }
                    if c >= q {
                        return Err(Error::parse(lineno, format!("color {c} outside 0..{q}")));
                    }
                    let idx = pair_index(n, u, v);
                    if seen[idx] {
                        return Err(Error::parse(lineno, format!("pair ({u},{v}) colored twice")));
                    }
                    seen[idx] = true;
                    colors[idx] = c as u8;
                }
            }
        }
        let (n, q, hline) = header.ok_or_else(|| Error::parse(1, "missing header `N q`"))?;
        if let Some(missing) = seen.iter().position(|&s| !s) {
            let mut idx = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if idx == missing {
                        return Err(Error::parse(hline, format!("pair ({u},{v}) has no color")));
                    }
                    idx += 1;
                }
            }
        }
        Ok(Self::from_parts(n, q, colors))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.q)?;
        let mut idx = 0;
        for u in 0..self.n {
            for v in u + 1..self.n {
                writeln!(w, "{u} {v} {}", self.colors[idx])?;
                idx += 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indexing_is_a_bijection() {
        let n = 9;
        let mut hit = vec![false; n * (n - 1) / 2];
        for u in 0..n {
            for v in u + 1..n {
                let i = pair_index(n, u, v);
                assert!(!hit[i]);
                hit[i] = true;
                assert_eq!(pair_index(n, v, u), i);
            }
        }
        assert!(hit.into_iter().all(|b| b));
    }

    #[test]
    fn class_graphs_partition_the_pairs() {
        let c = Coloring::from_fn(7, 3, |u, v| (u + v) % 3).unwrap();
        let total: usize = (0..3).map(|i| c.class_graph(i).edge_count()).sum();
        assert_eq!(total, 21);
        assert_eq!(c.class_sizes().iter().sum::<usize>(), 21);
        assert!(c.class_graph(c.color(2, 5)).has_edge(5, 2));
    }

    #[test]
    fn file_round_trip_and_totality() {
        let c = Coloring::from_fn(4, 2, |u, v| (u * v) % 2).unwrap();
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        assert_eq!(Coloring::read(buf.as_slice()).unwrap(), c);
        let err = Coloring::parse("3 2\n0 1 0\n0 2 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = Coloring::parse("3 2\n0 1 0\n0 2 2\n1 2 0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Coloring::parse("3 2\n0 1 0\n1 0 1\n1 2 0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
