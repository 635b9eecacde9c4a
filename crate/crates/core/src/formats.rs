//! JSON forms of witnesses, rich inflations and exact-search results.

use serde::{Deserialize, Serialize};

use crate::counting::inflation_density;
use crate::error::Result;
use crate::graph::Graph;
use crate::oracle::MaxBlowupResult;
use crate::parts::{BlowupWitness, CertificateSummary, InflationCertificate};
use crate::pattern::Pattern;
use crate::ramsey::RichInflation;
use crate::bitset::BitSet;

/// A blowup witness with its provenance. `mode` is `guaranteed`,
/// `adaptive`, or `exact` for the branch-and-bound oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub pattern: String,
    pub k: usize,
    pub classes: Vec<Vec<usize>>,
    pub mode: String,
    pub seed: u64,
    pub certificate: CertificateSummary,
}

impl WitnessJson {
    pub fn new(pattern: &Pattern, witness: &BlowupWitness, mode: &str, seed: u64, certificate: &InflationCertificate) -> Self {
        Self {
            pattern: pattern.name().to_string(),
            k: witness.k,
            classes: witness.classes.clone(),
            mode: mode.to_string(),
            seed,
            certificate: certificate.summary(),
        }
    }

    /// Uses the witness classes themselves as the certified part system.
    pub fn self_certified(g: &Graph, pattern: &Pattern, witness: &BlowupWitness, mode: &str, seed: u64) -> Result<Self> {
        let n = g.vertex_count();
        let parts: Vec<BitSet> = witness
            .classes
            .iter()
            .map(|c| BitSet::from_indices(n, c.iter().copied()))
            .collect();
        let cert = inflation_density(g, pattern, &parts)?;
        Ok(Self::new(pattern, witness, mode, seed, &cert))
    }

    pub fn witness(&self) -> BlowupWitness {
        BlowupWitness::new(self.classes.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RichJson {
    #[serde(flatten)]
    pub base: WitnessJson,
    pub color: usize,
    pub rho: String,
    pub eps: String,
}

impl RichJson {
    /// `k` is the smallest part size and `classes` are the full parts.
    pub fn new(rich: &RichInflation, mode: &str, seed: u64) -> Self {
        let classes = rich.parts().to_lists();
        Self {
            base: WitnessJson {
                pattern: format!("K{}", rich.h()),
                k: rich.certificate.min_part_size,
                classes,
                mode: mode.to_string(),
                seed,
                certificate: rich.certificate.summary(),
            },
            color: rich.color,
            rho: rich.rho.to_string(),
            eps: rich.eps.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxBlowupJson {
    #[serde(flatten)]
    pub base: WitnessJson,
    pub k_max: usize,
    pub complete: bool,
    pub nodes_explored: u64,
}

impl MaxBlowupJson {
    pub fn new(g: &Graph, pattern: &Pattern, result: &MaxBlowupResult, seed: u64) -> Result<Self> {
        let witness = result.witness.clone().unwrap_or_else(|| BlowupWitness::new(vec![Vec::new(); pattern.vertex_count()]));
        let base = if result.witness.is_some() {
            WitnessJson::self_certified(g, pattern, &witness, "exact", seed)?
        } else {
            WitnessJson {
                pattern: pattern.name().to_string(),
                k: 0,
                classes: witness.classes,
                mode: "exact".into(),
                seed,
                certificate: CertificateSummary {
                    count: "0".into(),
                    gamma: "0".into(),
                },
            }
        };
        Ok(Self {
            base,
            k_max: result.k_max,
            complete: result.complete,
            nodes_explored: result.nodes_explored,
        })
    }
}
