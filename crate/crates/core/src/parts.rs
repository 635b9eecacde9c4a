//! Part systems, inflation certificates and blowup witnesses.

use std::ops::Deref;

use num::{BigRational, BigUint, One, Zero};
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// An ordered tuple of pairwise-disjoint, nonempty vertex sets of one graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartSystem {
    parts: Vec<BitSet>,
}

impl Deref for PartSystem {
    type Target = [BitSet];
    fn deref(&self) -> &[BitSet] {
        &self.parts
    }
}

impl PartSystem {
    pub fn new(parts: Vec<BitSet>) -> Result<Self> {
        if let Some(i) = parts.iter().position(BitSet::is_empty) {
            return Err(Error::InvalidInput(format!("part {i} is empty")));
        }
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if parts[i].universe() != parts[j].universe() {
                    return Err(Error::InvalidInput("parts over different universes".into()));
                }
                if !parts[i].is_disjoint(&parts[j]) {
                    return Err(Error::InvalidInput(format!("parts {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { parts })
    }

    pub fn from_lists(n: usize, lists: &[Vec<usize>]) -> Result<Self> {
        let mut parts = Vec::with_capacity(lists.len());
        for list in lists {
            if let Some(&v) = list.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidInput(format!("vertex {v} out of range")));
            }
            parts.push(BitSet::from_indices(n, list.iter().copied()));
        }
        Self::new(parts)
    }

    /// Reads one part per line as whitespace-separated vertex indices;
    /// `#` starts a comment.
    pub fn read<R: std::io::BufRead>(n: usize, reader: R) -> Result<Self> {
        let mut lists = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let list = body
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::parse(i + 1, format!("`{t}` is not a vertex index")))
                })
                .collect::<Result<Vec<_>>>()?;
            lists.push(list);
        }
        Self::from_lists(n, &lists)
    }

    pub fn into_inner(self) -> Vec<BitSet> {
        self.parts
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(BitSet::count).collect()
    }

    pub fn min_size(&self) -> usize {
        self.parts.iter().map(BitSet::count).min().unwrap_or(0)
    }

    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.parts.iter().map(BitSet::to_vec).collect()
    }
}

/// Product of part sizes as an exact integer.
pub fn size_product(parts: &[BitSet]) -> BigUint {
    parts
        .iter()
        .fold(BigUint::one(), |acc, p| acc * BigUint::from(p.count()))
}

/// A part system with its exact canonical-copy count and density.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InflationCertificate {
    pub parts: PartSystem,
    pub canonical_count: BigUint,
    /// `canonical_count / prod |V_i|`.
    pub gamma: BigRational,
    pub min_part_size: usize,
}

impl InflationCertificate {
    pub fn new(parts: PartSystem, canonical_count: BigUint) -> Self {
        let denom = size_product(&parts);
        let gamma = if denom.is_zero() {
            BigRational::zero()
        } else {
            BigRational::new(canonical_count.clone().into(), denom.into())
        };
        let min_part_size = parts.min_size();
        Self {
            parts,
            canonical_count,
            gamma,
            min_part_size,
        }
    }

    pub fn gamma_f64(&self) -> f64 {
        crate::rational::to_f64(&self.gamma)
    }

    pub fn summary(&self) -> CertificateSummary {
        CertificateSummary {
            count: self.canonical_count.to_string(),
            gamma: self.gamma.to_string(),
        }
    }
}

/// Serialized form of a certificate: exact values as strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub count: String,
    pub gamma: String,
}

/// Classes `W_1..W_h`, each of size `k`, intended to span a copy of `H[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowupWitness {
    pub k: usize,
    pub classes: Vec<Vec<usize>>,
}

impl BlowupWitness {
    /// Builds a witness; each class is sorted.
    pub fn new(classes: Vec<Vec<usize>>) -> Self {
        let k = classes.iter().map(Vec::len).min().unwrap_or(0);
        let classes = classes
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        Self { k, classes }
    }

    /// A single canonical copy viewed as `H[1]`.
    pub fn from_copy(copy: &[usize]) -> Self {
        Self::new(copy.iter().map(|&v| vec![v]).collect())
    }

    /// Keeps the first `k` vertices of every class.
    pub fn truncated(&self, k: usize) -> Self {
        assert!(k <= self.k);
        Self {
            k,
            classes: self.classes.iter().map(|c| c[..k].to_vec()).collect(),
        }
    }
}
