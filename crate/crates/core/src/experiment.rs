//! Reproducible experiment sweeps with versioned CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::finder::{find_blowup, FinderOptions, Mode};
use crate::formats::{MaxBlowupJson, WitnessJson};
use crate::generate::{gen_gnp, gen_random_coloring, rng};
use crate::graph::Graph;
use crate::oracle::{max_blowup_exact, verify_blowup};
use crate::pattern::Pattern;
use crate::ramsey::{ramsey_blowup, RamseyOptions};
use crate::rational;

/// First line of every results file.
pub const SCHEMA_LINE: &str = "schema=1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// `find_blowup` on `G(n, p)`, reporting found and theoretical `k`.
    Scaling,
    /// Exact maximum blowup on `G(n, p)`.
    UpperBound,
    /// `ramsey_blowup` on uniform random `q`-colorings of `K_N`.
    Ramsey,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    /// `builtin:<name>` or a pattern file path.
    pub pattern: String,
    /// Vertex counts `n` (or `N` for colorings).
    pub sizes: Vec<usize>,
    /// Edge probabilities as rationals or decimals; used by graph experiments.
    #[serde(default)]
    pub probabilities: Vec<String>,
    /// Color counts; used by the Ramsey experiment.
    #[serde(default)]
    pub colors: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mode: Mode,
    #[serde(default = "default_retries")]
    pub retries: usize,
    #[serde(default = "default_node_budget")]
    pub node_budget: u64,
    #[serde(default = "default_tuple_budget")]
    pub tuple_budget: usize,
    /// Largest `k` the exact search tries.
    #[serde(default = "default_k_cap")]
    pub k_cap: usize,
    /// Scaling rows also run the exact search when `n` is at most this.
    #[serde(default)]
    pub oracle_max_n: usize,
    /// Target blowup size for the Ramsey experiment.
    #[serde(default = "default_k_target")]
    pub k_target: usize,
}

fn default_retries() -> usize {
    64
}
fn default_node_budget() -> u64 {
    1_000_000_000
}
fn default_tuple_budget() -> usize {
    100_000
}
fn default_k_cap() -> usize {
    64
}
fn default_k_target() -> usize {
    2
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.sizes.is_empty() || self.seeds.is_empty() {
            return bad("size and seed grids must be nonempty");
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct");
        }
        match self.kind {
            ExperimentKind::Scaling | ExperimentKind::UpperBound if self.probabilities.is_empty() => {
                bad("graph experiments need a nonempty probability grid")
            }
            ExperimentKind::Ramsey if self.colors.is_empty() => bad("the Ramsey experiment needs a nonempty color grid"),
            _ => {
                for p in &self.probabilities {
                    let v = rational::to_f64(&rational::parse(p)?);
                    if !(0.0..=1.0).contains(&v) {
                        return bad("probabilities must lie in [0, 1]");
                    }
                }
                if self.colors.contains(&0) {
                    return bad("color counts must be positive");
                }
                Ok(())
            }
        }
    }

    /// Hex SHA-256 of the canonical JSON form; names the run directory.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    fn finder_options(&self) -> FinderOptions {
        FinderOptions {
            retries: self.retries,
            ..FinderOptions::default()
        }
    }
}

/// Loads a pattern from `builtin:<name>` or a file path.
pub fn load_pattern(source: &str) -> Result<Pattern> {
    match source.strip_prefix("builtin:") {
        Some(name) => Pattern::builtin(name),
        None => {
            let file = fs::File::open(source)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{source}: {e}")))?;
            Pattern::read(std::io::BufReader::new(file))
        }
    }
}

/// One CSV row; column order is the field order, `wall_ms` last.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub pattern: String,
    pub n: usize,
    pub p: Option<String>,
    pub q: Option<usize>,
    pub seed: u64,
    pub mode: String,
    pub gamma: Option<String>,
    pub k_found: Option<usize>,
    pub k_theory: Option<u64>,
    pub k_max: Option<usize>,
    pub k_max_complete: Option<bool>,
    pub rounds: Option<u64>,
    pub route: Option<String>,
    pub status: String,
    pub error: Option<String>,
    pub witness_file: Option<String>,
    pub wall_ms: u128,
}

#[derive(Clone, Debug)]
struct Job {
    index: usize,
    n: usize,
    p: Option<String>,
    q: Option<usize>,
    seed: u64,
}

impl Job {
    fn tag(&self) -> String {
        let grid = match (&self.p, self.q) {
            (Some(p), _) => format!("p{}", p.replace('/', "over")),
            (None, Some(q)) => format!("q{q}"),
            _ => String::new(),
        };
        format!("n{}_{grid}_s{}", self.n, self.seed)
    }
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &n in &cfg.sizes {
        let grid: Vec<(Option<String>, Option<usize>)> = match cfg.kind {
            ExperimentKind::Ramsey => cfg.colors.iter().map(|&q| (None, Some(q))).collect(),
            _ => cfg.probabilities.iter().map(|p| (Some(p.clone()), None)).collect(),
        };
        for (p, q) in grid {
            for &seed in &cfg.seeds {
                out.push(Job {
                    index: out.len(),
                    n,
                    p: p.clone(),
                    q,
                    seed,
                });
            }
        }
    }
    out
}

/// What a row produced besides its CSV fields.
struct Produced {
    row: Row,
    witness: Option<(String, String)>,
}

fn write_witness<T: Serialize>(job: &Job, value: &T) -> Result<(String, String)> {
    let name = format!("witness_{}.json", job.tag());
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((name, text))
}

fn graph_for(job: &Job) -> Result<Graph> {
    let p = rational::to_f64(&rational::parse(job.p.as_deref().unwrap_or("0"))?);
    gen_gnp(job.n, p, job.seed)
}

fn run_job(cfg: &ExperimentConfig, pattern: &Pattern, job: &Job) -> Produced {
    let start = Instant::now();
    let mut row = Row {
        experiment: cfg.name.clone(),
        pattern: pattern.name().to_string(),
        n: job.n,
        p: job.p.clone(),
        q: job.q,
        seed: job.seed,
        mode: cfg.mode.to_string(),
        gamma: None,
        k_found: None,
        k_theory: None,
        k_max: None,
        k_max_complete: None,
        rounds: None,
        route: None,
        status: "ok".into(),
        error: None,
        witness_file: None,
        wall_ms: 0,
    };
    let outcome = match cfg.kind {
        ExperimentKind::Scaling => scaling_row(cfg, pattern, job, &mut row),
        ExperimentKind::UpperBound => upper_bound_row(cfg, pattern, job, &mut row),
        ExperimentKind::Ramsey => ramsey_row(cfg, pattern, job, &mut row),
    };
    let witness = match outcome {
        Ok(w) => w,
        Err(e) => {
            row.status = "error".into();
            row.error = Some(e.to_string());
            None
        }
    };
    row.witness_file = witness.as_ref().map(|(name, _)| name.clone());
    row.wall_ms = start.elapsed().as_millis();
    Produced { row, witness }
}

fn checked(g: &Graph, pattern: &Pattern, w: &crate::parts::BlowupWitness) -> Result<()> {
    let check = verify_blowup(g, pattern, w);
    if check.valid {
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!("witness failed verification: {:?}", check.violation)))
    }
}

fn scaling_row(cfg: &ExperimentConfig, pattern: &Pattern, job: &Job, row: &mut Row) -> Result<Option<(String, String)>> {
    let g = graph_for(job)?;
    let report = find_blowup(&g, pattern, cfg.mode, &mut rng(job.seed), &cfg.finder_options())?;
    checked(&g, pattern, &report.witness)?;
    row.gamma = Some(format!("{:.6e}", rational::to_f64(&report.gamma)));
    row.k_found = Some(report.witness.k);
    row.k_theory = Some(report.k_theory);
    row.route = Some(format!("{:?}", report.route).to_lowercase());
    if job.n <= cfg.oracle_max_n {
        let exact = max_blowup_exact(&g, pattern, cfg.k_cap, cfg.node_budget);
        row.k_max = Some(exact.k_max);
        row.k_max_complete = Some(exact.complete);
    }
    let json = match &report.certificate {
        Some(cert) => WitnessJson::new(pattern, &report.witness, &cfg.mode.to_string(), job.seed, cert),
        None => WitnessJson::self_certified(&g, pattern, &report.witness, &cfg.mode.to_string(), job.seed)?,
    };
    write_witness(job, &json).map(Some)
}

fn upper_bound_row(cfg: &ExperimentConfig, pattern: &Pattern, job: &Job, row: &mut Row) -> Result<Option<(String, String)>> {
    let g = graph_for(job)?;
    let exact = max_blowup_exact(&g, pattern, cfg.k_cap, cfg.node_budget);
    row.k_max = Some(exact.k_max);
    row.k_max_complete = Some(exact.complete);
    row.k_found = Some(exact.k_max);
    match &exact.witness {
        Some(w) => checked(&g, pattern, w)?,
        None => return Ok(None),
    }
    write_witness(job, &MaxBlowupJson::new(&g, pattern, &exact, job.seed)?).map(Some)
}

fn ramsey_row(cfg: &ExperimentConfig, pattern: &Pattern, job: &Job, row: &mut Row) -> Result<Option<(String, String)>> {
    let q = job.q.unwrap_or(2);
    let coloring: Coloring = gen_random_coloring(job.n, q, job.seed)?;
    let opts = RamseyOptions {
        retries: cfg.retries,
        sample_budget: cfg.tuple_budget,
        finder: cfg.finder_options(),
        ..RamseyOptions::default()
    };
    let report = ramsey_blowup(&coloring, pattern, cfg.k_target, cfg.mode, &mut rng(job.seed), &opts)?;
    let g = coloring.class_graph(report.color);
    checked(g, pattern, &report.witness)?;
    row.k_found = Some(report.witness.k);
    row.route = Some(format!("{:?}", report.route).to_lowercase());
    if let Some(search) = &report.rich {
        row.gamma = Some(format!("{:.6e}", search.rich.certificate.gamma_f64()));
        row.rounds = Some(search.state.as_ref().map_or(0, |s| s.t));
    }
    let mut json = WitnessJson::self_certified(g, pattern, &report.witness, &cfg.mode.to_string(), job.seed)?;
    json.pattern = format!("{} (color {})", pattern.name(), report.color);
    write_witness(job, &json).map(Some)
}

/// Rows of a finished run and where they were written.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    pub dir: Option<PathBuf>,
}

/// Serializes rows as the versioned CSV.
pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut out = format!("{SCHEMA_LINE}\n");
    out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
    Ok(out)
}

/// Runs every `(size, grid value, seed)` job on `workers` threads. Rows come
/// back in grid order. With `out`, writes `results.csv`, `config.json` and
/// witness files into `out/<config hash>/`.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>, workers: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pattern = load_pattern(&cfg.pattern)?;
    let all = jobs(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut produced: Vec<(usize, Produced)> =
        pool.install(|| all.par_iter().map(|j| (j.index, run_job(cfg, &pattern, j))).collect());
    produced.sort_by_key(|(i, _)| *i);
    let dir = match out {
        Some(root) => {
            let dir = root.join(&cfg.hash()[..16]);
            fs::create_dir_all(&dir)?;
            let config = serde_json::to_string_pretty(cfg).map_err(|e| Error::InvalidInput(e.to_string()))?;
            fs::write(dir.join("config.json"), config)?;
            for (_, p) in &produced {
                if let Some((name, text)) = &p.witness {
                    fs::write(dir.join(name), text)?;
                }
            }
            let rows: Vec<Row> = produced.iter().map(|(_, p)| p.row.clone()).collect();
            fs::write(dir.join("results.csv"), rows_to_csv(&rows)?)?;
            Some(dir)
        }
        None => None,
    };
    Ok(ExperimentOutput {
        rows: produced.into_iter().map(|(_, p)| p.row).collect(),
        dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            kind,
            pattern: "builtin:k2".into(),
            sizes: vec![24, 32],
            probabilities: vec!["1/2".into()],
            colors: vec![2],
            seeds: vec![1, 2, 3],
            mode: Mode::Adaptive,
            retries: 16,
            node_budget: 10_000_000,
            tuple_budget: 1000,
            k_cap: 12,
            oracle_max_n: 24,
            k_target: 2,
        }
    }

    #[test]
    fn validation() {
        let mut c = cfg(ExperimentKind::Scaling);
        assert!(c.validate().is_ok());
        c.seeds = vec![1, 1];
        assert!(c.validate().is_err());
        let mut c = cfg(ExperimentKind::Scaling);
        c.probabilities.clear();
        assert!(c.validate().is_err());
        let mut c = cfg(ExperimentKind::Scaling);
        c.probabilities = vec!["3/2".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rows_are_stable_across_worker_counts() {
        let c = cfg(ExperimentKind::Scaling);
        let strip = |rows: Vec<Row>| {
            rows.into_iter()
                .map(|mut r| {
                    r.wall_ms = 0;
                    r
                })
                .collect::<Vec<_>>()
        };
        let a = strip(run_experiment(&c, None, 1).unwrap().rows);
        let b = strip(run_experiment(&c, None, 4).unwrap().rows);
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.status == "ok"));
        assert!(a.iter().filter(|r| r.n == 24).all(|r| r.k_max.is_some()));
        let csv = rows_to_csv(&a).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SCHEMA_LINE));
        assert!(lines.next().unwrap().ends_with(",wall_ms"));
    }

    #[test]
    fn upper_bound_and_ramsey_rows() {
        let rows = run_experiment(&cfg(ExperimentKind::UpperBound), None, 2).unwrap().rows;
        assert!(rows.iter().all(|r| r.k_max_complete == Some(true) && r.k_max.unwrap() < 12));
        let mut c = cfg(ExperimentKind::Ramsey);
        c.sizes = vec![60];
        let rows = run_experiment(&c, None, 2).unwrap().rows;
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.status, "ok", "{:?}", r.error);
            assert!(r.rounds.unwrap() <= 2u64.pow(8) * 10);
        }
    }
}
