//! Monochromatic rich inflations of cliques in edge colorings, found by a
//! density-increment process, and the blowups they lead to.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, BigUint, One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::bitset::BitSet;
use crate::coloring::Coloring;
use crate::counting::count_canonical_copies;
use crate::error::{Error, Result};
use crate::finder::{find_blowup, find_blowup_partite, FinderOptions, Mode};
use crate::graph::Graph;
use crate::oracle::verify_blowup;
use crate::parts::{BlowupWitness, InflationCertificate, PartSystem};
use crate::pattern::{Pattern, SmallGraph};
use crate::rational::{self, from_uint, int, ln_int, ratio, Interval};

/// Parts `V_1..V_h` in one color whose first part has edge density at least
/// `rho` and whose canonical clique density is at least `((1-eps) rho)^{e(K_h)}`.
#[derive(Clone, Debug)]
pub struct RichInflation {
    pub color: usize,
    pub rho: BigRational,
    pub eps: BigRational,
    /// Canonical `K_h` count in the color class.
    pub certificate: InflationCertificate,
}

impl RichInflation {
    pub fn parts(&self) -> &PartSystem {
        &self.certificate.parts
    }

    pub fn h(&self) -> usize {
        self.certificate.parts.len()
    }
}

fn clique_edges(h: usize) -> usize {
    h * h.saturating_sub(1) / 2
}

fn binom2(n: usize) -> u64 {
    (n as u64) * (n as u64).saturating_sub(1) / 2
}

/// `⌈f · m⌉` for a nonnegative rational `f`.
fn ceil_mul(f: &BigRational, m: usize) -> u64 {
    (f * int(m as u64))
        .ceil()
        .to_integer()
        .to_u64()
        .unwrap_or(u64::MAX)
}

/// Measures a claimed rich inflation: first-part edge count and the clique
/// certificate in the color class.
fn measure_rich(coloring: &Coloring, color: usize, parts: &[BitSet]) -> Result<(usize, InflationCertificate)> {
    if color >= coloring.color_count() {
        return Err(Error::InvalidInput(format!("color {color} out of range")));
    }
    if parts.is_empty() {
        return Err(Error::InvalidInput("a rich inflation needs at least one part".into()));
    }
    let g = coloring.class_graph(color);
    let system = PartSystem::new(parts.to_vec())?;
    let count = count_canonical_copies(g, &SmallGraph::complete(parts.len()), parts)?.count;
    Ok((g.edges_within(&parts[0]), InflationCertificate::new(system, count)))
}

fn rich_holds(first_edges: usize, cert: &InflationCertificate, rho: &BigRational, eps: &BigRational) -> bool {
    let v1 = cert.parts[0].count();
    let dense = int(first_edges as u64) >= rho * int(binom2(v1));
    let floor = rational::pow(&((BigRational::one() - eps) * rho), clique_edges(cert.parts.len()));
    dense && cert.gamma >= floor
}

/// Builds a [`RichInflation`] after checking both defining inequalities exactly.
pub fn certify_rich(
    coloring: &Coloring,
    color: usize,
    parts: &[BitSet],
    rho: &BigRational,
    eps: &BigRational,
) -> Result<RichInflation> {
    let (edges, certificate) = measure_rich(coloring, color, parts)?;
    if !rich_holds(edges, &certificate, rho, eps) {
        return Err(Error::Precondition(format!(
            "parts are not a ({rho}, {eps})-rich inflation in color {color}"
        )));
    }
    Ok(RichInflation {
        color,
        rho: rho.clone(),
        eps: eps.clone(),
        certificate,
    })
}

fn majority_color(coloring: &Coloring, within: &BitSet) -> (usize, usize) {
    let mut best = (0, 0);
    for c in 0..coloring.color_count() {
        let e = coloring.class_graph(c).edges_within(within);
        if e > best.1 || c == 0 {
            best = (c, e);
        }
    }
    best
}

fn pigeonhole_within(coloring: &Coloring, within: &BitSet, eps: &BigRational) -> Result<RichInflation> {
    if within.count() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least two vertices, have {}",
            within.count()
        )));
    }
    let (color, _) = majority_color(coloring, within);
    let rho = ratio(1, coloring.color_count() as u64);
    certify_rich(coloring, color, std::slice::from_ref(within), &rho, eps).map_err(|_| {
        Error::InvariantViolation("the majority color is below the average density".into())
    })
}

/// The majority color on all vertices as a rich inflation of `K_1` with
/// `rho = 1/q`; ties go to the lowest color. `K_1` has no edges, so `eps`
/// only labels the result.
pub fn pigeonhole_base(coloring: &Coloring) -> Result<RichInflation> {
    let all = BitSet::full(coloring.vertex_count());
    pigeonhole_within(coloring, &all, &ratio(1, 10))
}

/// Disjoint `A, B` inside `vertices` with every `y ∈ B` having at least
/// `(1-eps) rho |A|` neighbours in `A`.
#[derive(Clone, Debug)]
pub struct BipartiteSplit {
    pub a: BitSet,
    pub b: BitSet,
    pub attempts: usize,
    /// Whether both sides reach `(eps^2/16) rho n`.
    pub sizes_met: bool,
}

/// Extracts a one-sided minimum-degree pair from a dense vertex set.
///
/// Guaranteed mode follows the heavy-vertex sampling argument with
/// `|B_0| = ⌈eps n / 4⌉` and resamples until the size bound holds. Adaptive
/// mode samples `|B_0| = ⌈n/2⌉`, keeps every vertex of `B_0` meeting the
/// degree bound into `A`, and returns the largest `B` over the retries.
pub fn dense_to_bipartite<R: Rng>(
    g: &Graph,
    vertices: &BitSet,
    rho: &BigRational,
    eps: &BigRational,
    mode: Mode,
    rng: &mut R,
    max_retries: usize,
) -> Result<BipartiteSplit> {
    if !rho.is_positive() || *rho > BigRational::one() {
        return Err(Error::InvalidInput(format!("rho = {rho} must lie in (0, 1]")));
    }
    if !eps.is_positive() || *eps > BigRational::one() {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 1]")));
    }
    let n = vertices.count();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two vertices".into()));
    }
    if int(g.edges_within(vertices) as u64) < rho * int(binom2(n)) {
        return Err(Error::Precondition(format!("edge density below rho = {rho}")));
    }
    let size_floor = eps * eps / int(16) * rho * int(n as u64);
    let one = BigRational::one();
    let list = vertices.to_vec();
    let universe = g.vertex_count();
    let b0_size = match mode {
        Mode::Guaranteed => ceil_mul(&(eps / int(4)), n) as usize,
        Mode::Adaptive => n.div_ceil(2),
    }
    .clamp(1, n - 1);
    let heavy_floor = (&one - eps / int(2)) * rho * int(n as u64 - 1);
    let strict_floor = (&one - eps) * rho * int(n as u64 - 1);
    let mut best: Option<BipartiteSplit> = None;
    for attempt in 1..=max_retries.max(1) {
        let b0 = BitSet::from_indices(universe, list.choose_multiple(rng, b0_size).copied());
        let a = vertices.difference(&b0);
        let a_size = a.count();
        let need = match mode {
            Mode::Guaranteed => strict_floor.ceil().to_integer().to_usize().unwrap_or(usize::MAX),
            Mode::Adaptive => ceil_mul(&((&one - eps) * rho), a_size) as usize,
        };
        let b = BitSet::from_indices(
            universe,
            b0.iter().filter(|&v| {
                let heavy = mode == Mode::Adaptive
                    || int(g.degree_into(v, vertices) as u64) > heavy_floor;
                heavy && g.degree_into(v, &a) >= need
            }),
        );
        let sizes_met = int(b.count() as u64) >= size_floor && int(a_size as u64) >= size_floor;
        let split = BipartiteSplit {
            a,
            b,
            attempts: attempt,
            sizes_met,
        };
        if mode == Mode::Guaranteed {
            if sizes_met && !split.b.is_empty() {
                return Ok(split);
            }
            continue;
        }
        let full = split.b.count() == b0_size;
        if best.as_ref().is_none_or(|s| split.b.count() > s.b.count()) {
            best = Some(split);
        }
        if full {
            break;
        }
    }
    match best {
        Some(s) if !s.b.is_empty() => Ok(s),
        _ => Err(Error::BudgetExhausted(format!(
            "no split met the degree and size bounds in {max_retries} attempts"
        ))),
    }
}

/// One vertex's degrees for [`complement_increment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeRow {
    pub vertex: usize,
    /// Degree into `X`.
    pub total: usize,
    /// Degree into `X*`.
    pub into_xstar: usize,
}

/// Checks that removing `X*` boosts the density: every listed vertex has at
/// least `(1 + c xi) p |X'|` neighbours in `X' = X \ X*`, `c = |X*|/|X|`.
/// Returns the boost factor `1 + c xi`.
pub fn complement_increment(
    x_size: usize,
    xstar_size: usize,
    p: &BigRational,
    xi: &BigRational,
    rows: &[DegreeRow],
) -> Result<BigRational> {
    if x_size == 0 || xstar_size > x_size {
        return Err(Error::InvalidInput(format!(
            "need 0 < |X*| <= |X|, got |X| = {x_size}, |X*| = {xstar_size}"
        )));
    }
    let one = BigRational::one();
    let c = ratio(xstar_size as u64, x_size as u64);
    let boost = &one + &c * xi;
    let x_prime = x_size - xstar_size;
    for r in rows {
        if int(r.total as u64) < p * int(x_size as u64) {
            return Err(Error::Precondition(format!(
                "vertex {} has degree {} below p|X|",
                r.vertex, r.total
            )));
        }
        if r.into_xstar > r.total || int(r.into_xstar as u64) > (&one - xi) * p * int(xstar_size as u64) {
            return Err(Error::Precondition(format!(
                "vertex {} has degree {} into X*, above (1 - xi) p |X*|",
                r.vertex, r.into_xstar
            )));
        }
        if int((r.total - r.into_xstar) as u64) < &boost * p * int(x_prime as u64) {
            return Err(Error::InvariantViolation(format!(
                "vertex {} misses the boosted degree into X'",
                r.vertex
            )));
        }
    }
    Ok(boost)
}

/// The increment branch: a denser pair `(X', Y')`.
#[derive(Clone, Debug)]
pub struct Increment {
    pub x_prime: BitSet,
    pub y_prime: BitSet,
    /// `min_{y ∈ Y'} d_{X'}(y) / |X'|`.
    pub p_prime: BigRational,
    /// Required factor `1 + eps rho^{2h}`; `p_prime >= boost * p`.
    pub boost: BigRational,
    /// Factor `1 + c xi` certified by the complement argument.
    pub complement_boost: BigRational,
    /// Part index (0-based) of the failing coordinate.
    pub i_star: usize,
    /// Fixed vertices `y*_1..y*_{i*-1}`.
    pub prefix: Vec<usize>,
    /// Vertices of `V_{i*}` whose degree into `X*` falls short.
    pub failing: usize,
    pub prefixes_scanned: u64,
    pub sampled: bool,
    /// `|X'| >= eps rho^{h^2} |X|`.
    pub x_size_met: bool,
    /// `|Y'| >= eps rho^{h^2} n`.
    pub y_size_met: bool,
}

#[derive(Clone, Debug)]
pub enum IncrementOutcome {
    /// `(V_1..V_h, X)` is a `(rho, 2 eps)`-rich inflation of `K_{h+1}`.
    Extended(RichInflation),
    Increment(Increment),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamseyOptions {
    pub retries: usize,
    /// Prefix scans above this many prefixes switch to sampling.
    pub enumeration_limit: u64,
    pub sample_budget: usize,
    pub finder: FinderOptions,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        Self {
            retries: 64,
            enumeration_limit: 1_000_000,
            sample_budget: 100_000,
            finder: FinderOptions::default(),
        }
    }
}

struct PrefixSearch<'a> {
    g: &'a Graph,
    parts: &'a [BitSet],
    x: &'a BitSet,
    /// `(1 - eps/(2h)) p`.
    fail_factor: BigRational,
    /// `(1 + eps rho^{2h}) p`.
    boost_factor: BigRational,
    best: Option<Candidate>,
    scanned: u64,
}

#[derive(Clone)]
struct Candidate {
    i_star: usize,
    prefix: Vec<usize>,
    xstar: BitSet,
    y_prime: BitSet,
    failing: usize,
}

impl PrefixSearch<'_> {
    fn fails(&self, inside: usize, of: usize) -> bool {
        (inside as u64) < ceil_mul(&self.fail_factor, of)
    }

    /// Scores the prefix as a candidate with `i* = prefix.len()`.
    fn evaluate(&mut self, prefix: &[usize], xstar: &BitSet) {
        self.scanned += 1;
        let i_star = prefix.len();
        let x_prime = self.x.difference(xstar);
        if x_prime.is_empty() {
            return;
        }
        let star = xstar.count();
        let need = ceil_mul(&self.boost_factor, x_prime.count());
        let mut failing = 0;
        let mut y_prime = BitSet::new(self.g.vertex_count());
        for y in self.parts[i_star].iter() {
            let row = self.g.neighbors(y);
            if !self.fails(row.intersection_count(xstar), star) {
                continue;
            }
            failing += 1;
            if row.intersection_count(&x_prime) as u64 >= need {
                y_prime.insert(y);
            }
        }
        if y_prime.is_empty() {
            return;
        }
        let better = match &self.best {
            None => true,
            Some(b) => {
                let key = (y_prime.count(), x_prime.count());
                let old = (b.y_prime.count(), self.x.count() - b.xstar.count());
                key > old || (key == old && (i_star, prefix) < (b.i_star, b.prefix.as_slice()))
            }
        };
        if better {
            self.best = Some(Candidate {
                i_star,
                prefix: prefix.to_vec(),
                xstar: xstar.clone(),
                y_prime,
                failing,
            });
        }
    }

    /// Depth-first scan over prefixes with no earlier failure.
    fn scan(&mut self, prefix: &mut Vec<usize>, current: &BitSet) {
        let depth = prefix.len();
        if depth >= 1 {
            self.evaluate(prefix, current);
        }
        if depth + 1 >= self.parts.len() {
            return;
        }
        let mut next = current.clone();
        for y in self.parts[depth].to_vec() {
            next.assign_intersection(current, self.g.neighbors(y));
            if self.fails(next.count(), current.count()) {
                continue;
            }
            prefix.push(y);
            let n = next.clone();
            self.scan(prefix, &n);
            prefix.pop();
        }
    }

    /// Uniform random prefixes of random length.
    fn sample<R: Rng>(&mut self, rng: &mut R, budget: usize) {
        let h = self.parts.len();
        let lists: Vec<Vec<usize>> = self.parts[..h - 1].iter().map(BitSet::to_vec).collect();
        for _ in 0..budget {
            let len = rng.gen_range(1..h);
            let mut current = self.x.clone();
            let mut prefix = Vec::with_capacity(len);
            let mut ok = true;
            for list in lists.iter().take(len) {
                let y = list[rng.gen_range(0..list.len())];
                let next = current.intersection(self.g.neighbors(y));
                if self.fails(next.count(), current.count()) {
                    ok = false;
                    break;
                }
                prefix.push(y);
                current = next;
            }
            if ok {
                self.evaluate(&prefix, &current);
            }
        }
    }
}

/// Either extends a rich clique inflation by `X`, or finds `X' ⊆ X`,
/// `Y' ⊆ V_{i*}` with boosted minimum degree.
///
/// `p` must be a minimum-degree ratio from `∪ parts` into `X`. The increment
/// is located by scanning prefixes `y*_1..y*_{i*-1}` with no earlier failure
/// (sampling above the enumeration limit) and keeping the prefix with the
/// most vertices of `V_{i*}` that both fail into `X*` and reach the boosted
/// degree into `X' = X \ X*`.
#[allow(clippy::too_many_arguments)]
pub fn rich_increment<R: Rng>(
    coloring: &Coloring,
    color: usize,
    parts: &[BitSet],
    x: &BitSet,
    p: &BigRational,
    rho: &BigRational,
    eps: &BigRational,
    rng: &mut R,
    opts: &RamseyOptions,
) -> Result<IncrementOutcome> {
    let one = BigRational::one();
    if !eps.is_positive() || *eps > ratio(1, 9) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 1/9]")));
    }
    if !rho.is_positive() || *rho > one {
        return Err(Error::InvalidInput(format!("rho = {rho} must lie in (0, 1]")));
    }
    let base = certify_rich(coloring, color, parts, rho, eps)?;
    let h = parts.len();
    if x.is_empty() {
        return Err(Error::InvalidInput("X is empty".into()));
    }
    let union = parts.iter().fold(BitSet::new(coloring.vertex_count()), |acc, s| acc.union(s));
    if !union.is_disjoint(x) {
        return Err(Error::Precondition("X meets the parts".into()));
    }
    let g = coloring.class_graph(color);
    let min_deg = ceil_mul(p, x.count());
    if let Some(y) = union.iter().find(|&y| (g.degree_into(y, x) as u64) < min_deg) {
        return Err(Error::Precondition(format!("vertex {y} has fewer than p|X| neighbours in X")));
    }

    let mut extended = parts.to_vec();
    extended.push(x.clone());
    let (edges, cert) = measure_rich(coloring, color, &extended)?;
    let two_eps = eps * int(2);
    if rich_holds(edges, &cert, rho, &two_eps) {
        return Ok(IncrementOutcome::Extended(RichInflation {
            color,
            rho: rho.clone(),
            eps: two_eps,
            certificate: cert,
        }));
    }
    if h == 1 {
        return Err(Error::Precondition(format!(
            "p = {p} is below (1 - 2 eps) rho, so the K_2 extension fails"
        )));
    }

    let hh = int(h as u64);
    let xi = eps / (int(2) * &hh);
    let boost = &one + eps * rational::pow(rho, 2 * h);
    let mut search = PrefixSearch {
        g,
        parts,
        x,
        fail_factor: (&one - &xi) * p,
        boost_factor: &boost * p,
        best: None,
        scanned: 0,
    };
    let mut total = 0u64;
    let mut prod = 1u64;
    for part in &parts[..h - 1] {
        prod = prod.saturating_mul(part.count() as u64);
        total = total.saturating_add(prod);
    }
    let sampled = total > opts.enumeration_limit;
    if sampled {
        search.sample(rng, opts.sample_budget);
    } else {
        search.scan(&mut Vec::new(), x);
    }
    let scanned = search.scanned;
    let Some(best) = search.best else {
        return Err(Error::BudgetExhausted(format!(
            "neither the extension nor an increment was found after {scanned} prefixes"
        )));
    };

    let x_prime = x.difference(&best.xstar);
    let rows: Vec<DegreeRow> = best
        .y_prime
        .iter()
        .map(|y| DegreeRow {
            vertex: y,
            total: g.degree_into(y, x),
            into_xstar: g.degree_into(y, &best.xstar),
        })
        .collect();
    let complement_boost = complement_increment(x.count(), best.xstar.count(), p, &xi, &rows)?;
    let xp = x_prime.count() as u64;
    let p_prime = best
        .y_prime
        .iter()
        .map(|y| ratio(g.degree_into(y, &x_prime) as u64, xp))
        .min()
        .expect("Y' is nonempty");
    if p_prime < &boost * p {
        return Err(Error::InvariantViolation("increment misses the boosted degree".into()));
    }
    let size_factor = eps * rational::pow(rho, h * h);
    let n = base.certificate.min_part_size;
    Ok(IncrementOutcome::Increment(Increment {
        x_size_met: int(xp) >= &size_factor * int(x.count() as u64),
        y_size_met: int(best.y_prime.count() as u64) >= &size_factor * int(n as u64),
        x_prime,
        y_prime: best.y_prime,
        p_prime,
        boost,
        complement_boost,
        i_star: best.i_star,
        prefix: best.prefix,
        failing: best.failing,
        prefixes_scanned: scanned,
        sampled,
    }))
}

/// What a round of the increment process did.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RoundAction {
    /// A new color entered with a fresh `X_i`.
    Admit { sizes_met: bool },
    /// `X_i` and `Y` shrank and `p_i` grew.
    Increment {
        i_star: usize,
        prefix: Vec<usize>,
        failing: usize,
        sampled: bool,
        x_size_met: bool,
        y_size_met: bool,
    },
    /// The clique inflation was extended by `X_i`; the process halted.
    Extend,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundLog {
    pub round: u64,
    pub color: usize,
    pub action: RoundAction,
    /// Part sizes of the smaller clique inflation found this round.
    pub inner_sizes: Vec<usize>,
    pub y_size: usize,
    pub x_size: usize,
    /// `p_i` after the round, exact.
    pub p: String,
}

/// State of the increment process at one clique size.
#[derive(Clone, Debug)]
pub struct IncrementState {
    pub t: u64,
    pub y: BitSet,
    /// Colors admitted so far, in admission order.
    pub active: Vec<usize>,
    pub x: Vec<Option<BitSet>>,
    pub p: Vec<Option<BigRational>>,
    /// `⌈q^{4(h-1)}/eps⌉`, which is at most `⌈q^{4h}/eps⌉`.
    pub round_bound: u64,
    pub increments: Vec<u64>,
    pub trace: Vec<RoundLog>,
}

impl IncrementState {
    fn new(y: BitSet, q: usize, round_bound: u64) -> Self {
        Self {
            t: 0,
            y,
            active: Vec::new(),
            x: vec![None; q],
            p: vec![None; q],
            round_bound,
            increments: vec![0; q],
            trace: Vec::new(),
        }
    }

    /// Exact recount of `|N_i(y) ∩ X_i| >= p_i |X_i|` and `p_i <= 1`.
    pub fn check(&self, coloring: &Coloring) -> Result<()> {
        for &c in &self.active {
            let (Some(x), Some(p)) = (&self.x[c], &self.p[c]) else {
                return Err(Error::InvariantViolation(format!("color {c} lost its state")));
            };
            if *p > BigRational::one() {
                return Err(Error::InvariantViolation(format!("p_{c} = {p} exceeds 1")));
            }
            if !x.is_disjoint(&self.y) {
                return Err(Error::InvariantViolation(format!("X_{c} meets Y")));
            }
            let need = ceil_mul(p, x.count());
            let g = coloring.class_graph(c);
            if let Some(y) = self.y.iter().find(|&y| (g.degree_into(y, x) as u64) < need) {
                return Err(Error::InvariantViolation(format!(
                    "vertex {y} has fewer than p_{c}|X_{c}| neighbours in X_{c}"
                )));
            }
        }
        Ok(())
    }
}

/// A rich inflation with the process state that produced it.
#[derive(Clone, Debug)]
pub struct RichSearch {
    pub rich: RichInflation,
    /// Top-level state; `None` for `h = 1`.
    pub state: Option<IncrementState>,
}

fn round_bound(q: usize, h: usize, eps: &BigRational) -> u64 {
    let k = from_uint(&num::pow(BigUint::from(q), 4 * h.saturating_sub(1))) / eps;
    k.ceil().to_integer().to_u64().unwrap_or(u64::MAX)
}

fn min_ratio(g: &Graph, ys: &BitSet, x: &BitSet) -> BigRational {
    let xs = x.count() as u64;
    ys.iter()
        .map(|y| g.degree_into(y, x) as u64)
        .min()
        .map_or_else(BigRational::one, |d| ratio(d, xs))
}

fn run_level<R: Rng>(
    coloring: &Coloring,
    within: &BitSet,
    h: usize,
    eps: &BigRational,
    mode: Mode,
    rng: &mut R,
    opts: &RamseyOptions,
) -> Result<RichSearch> {
    if h == 1 {
        return Ok(RichSearch {
            rich: pigeonhole_within(coloring, within, eps)?,
            state: None,
        });
    }
    let q = coloring.color_count();
    let rho = ratio(1, q as u64);
    let inner_eps = eps / int(2);
    let bound = round_bound(q, h, eps);
    let per_color = bound.div_ceil(q as u64) + 1;
    let halt_log2 = match mode {
        Mode::Guaranteed => Some(-eta_bound_unchecked(q, h - 1, &inner_eps).log2()),
        Mode::Adaptive => None,
    };
    let mut st = IncrementState::new(within.clone(), q, bound);
    loop {
        if st.t >= bound {
            return Err(Error::InvariantViolation(format!(
                "the increment process exceeded {bound} rounds"
            )));
        }
        if let Some(limit) = halt_log2 {
            if (st.y.count() as f64).log2() <= limit {
                return Err(Error::Precondition(format!(
                    "|Y| = {} is at most 1/η = 2^{limit:.3e} after {} rounds",
                    st.y.count(),
                    st.t
                )));
            }
        }
        st.t += 1;
        let inner = run_level(coloring, &st.y, h - 1, &inner_eps, mode, rng, opts).map_err(|e| match e {
            Error::InvariantViolation(_) => e,
            other => Error::BudgetExhausted(format!(
                "K_{} search failed in round {} with |Y| = {}: {other}",
                h - 1,
                st.t,
                st.y.count()
            )),
        })?;
        let c = inner.rich.color;
        let inner_parts = inner.rich.parts().to_vec();
        let inner_sizes = inner.rich.parts().sizes();
        let g = coloring.class_graph(c);
        let action = match st.x[c].clone() {
            None => {
                let split = dense_to_bipartite(g, &inner_parts[0], &rho, eps, mode, rng, opts.retries)?;
                let p = min_ratio(g, &split.b, &split.a);
                if p < (BigRational::one() - eps) * &rho {
                    return Err(Error::InvariantViolation(format!(
                        "admitted color {c} with p = {p} below (1 - eps) rho"
                    )));
                }
                st.y = split.b;
                st.x[c] = Some(split.a);
                st.p[c] = Some(p);
                st.active.push(c);
                RoundAction::Admit {
                    sizes_met: split.sizes_met,
                }
            }
            Some(x) => {
                let p = st.p[c].clone().expect("active color has p");
                match rich_increment(coloring, c, &inner_parts, &x, &p, &rho, &inner_eps, rng, opts)? {
                    IncrementOutcome::Extended(rich) => {
                        st.trace.push(RoundLog {
                            round: st.t,
                            color: c,
                            action: RoundAction::Extend,
                            inner_sizes,
                            y_size: st.y.count(),
                            x_size: x.count(),
                            p: p.to_string(),
                        });
                        return Ok(RichSearch {
                            rich,
                            state: Some(st),
                        });
                    }
                    IncrementOutcome::Increment(inc) => {
                        st.increments[c] += 1;
                        if st.increments[c] > per_color {
                            return Err(Error::InvariantViolation(format!(
                                "color {c} received more than {per_color} increments"
                            )));
                        }
                        st.y = inc.y_prime;
                        st.x[c] = Some(inc.x_prime);
                        st.p[c] = Some(inc.p_prime);
                        RoundAction::Increment {
                            i_star: inc.i_star,
                            prefix: inc.prefix,
                            failing: inc.failing,
                            sampled: inc.sampled,
                            x_size_met: inc.x_size_met,
                            y_size_met: inc.y_size_met,
                        }
                    }
                }
            }
        };
        st.trace.push(RoundLog {
            round: st.t,
            color: c,
            action,
            inner_sizes,
            y_size: st.y.count(),
            x_size: st.x[c].as_ref().map_or(0, BitSet::count),
            p: st.p[c].as_ref().map_or_else(String::new, ToString::to_string),
        });
        st.check(coloring)?;
    }
}

/// Runs the density-increment process for `K_h`, recursing on `K_{h-1}` with
/// `eps/2` inside the current vertex set at every round.
pub fn find_monochromatic_rich_inflation<R: Rng>(
    coloring: &Coloring,
    h: usize,
    eps: &BigRational,
    mode: Mode,
    rng: &mut R,
    opts: &RamseyOptions,
) -> Result<RichSearch> {
    if h == 0 {
        return Err(Error::InvalidInput("clique size must be at least 1".into()));
    }
    if !eps.is_positive() || *eps > ratio(1, 9) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 1/9]")));
    }
    let all = BitSet::full(coloring.vertex_count());
    let out = run_level(coloring, &all, h, eps, mode, rng, opts)?;
    let rich = &out.rich;
    let (edges, cert) = measure_rich(coloring, rich.color, rich.parts())?;
    if cert.canonical_count != rich.certificate.canonical_count || !rich_holds(edges, &cert, &rich.rho, &rich.eps) {
        return Err(Error::InvariantViolation("returned inflation fails its recount".into()));
    }
    Ok(out)
}

/// `η` as an exact product of prime powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaBound {
    /// Prime to exponent; primes with zero exponent are absent.
    pub exponents: BTreeMap<u64, BigInt>,
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n.is_multiple_of(d) {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

impl EtaBound {
    fn one() -> Self {
        Self {
            exponents: BTreeMap::new(),
        }
    }

    fn mul_int(&mut self, n: u64, exp: &BigInt) {
        for (p, e) in factor(n) {
            let slot = self.exponents.entry(p).or_insert_with(BigInt::zero);
            *slot += exp * BigInt::from(e);
        }
        self.exponents.retain(|_, e| !e.is_zero());
    }

    fn pow(&mut self, k: &BigInt) {
        for e in self.exponents.values_mut() {
            *e *= k;
        }
    }

    /// `log2 η`, in floating point.
    pub fn log2(&self) -> f64 {
        self.exponents
            .iter()
            .map(|(&p, e)| e.to_f64().unwrap_or(f64::NEG_INFINITY) * (p as f64).log2())
            .sum()
    }

    /// Certified enclosure of `ln η`.
    pub fn ln(&self) -> Interval {
        self.exponents.iter().fold(Interval::exact(BigRational::zero()), |acc, (&p, e)| {
            acc.add(&ln_int(p).scale(&BigRational::from_integer(e.clone())))
        })
    }

    /// The exact value, when it has at most `max_bits` bits of numerator and denominator.
    pub fn exact(&self, max_bits: u64) -> Option<BigRational> {
        let bits: f64 = self.exponents.iter().map(|(&p, e)| e.abs().to_f64().unwrap_or(f64::INFINITY) * (p as f64).log2()).sum();
        if bits > max_bits as f64 {
            return None;
        }
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, e) in &self.exponents {
            let k = e.abs().to_usize()?;
            let f = num::pow(BigInt::from(p), k);
            if e.is_positive() {
                num *= f;
            } else {
                den *= f;
            }
        }
        Some(BigRational::new(num, den))
    }
}

fn eps_parts(eps: &BigRational) -> (u64, u64) {
    (
        eps.numer().to_u64().expect("eps numerator fits u64"),
        eps.denom().to_u64().expect("eps denominator fits u64"),
    )
}

fn eta_bound_unchecked(q: usize, h: usize, eps: &BigRational) -> EtaBound {
    if h <= 1 {
        return EtaBound::one();
    }
    let hm = h - 1;
    let mut inner = eta_bound_unchecked(q, hm, &(eps / int(2)));
    let (a, b) = eps_parts(eps);
    inner.mul_int(a, &BigInt::from(4));
    inner.mul_int(b, &BigInt::from(-4));
    inner.mul_int(q as u64, &-BigInt::from(hm * hm));
    let k = (from_uint(&num::pow(BigUint::from(q), 4 * hm)) / eps).ceil().to_integer();
    inner.pow(&k);
    inner
}

/// Lower bound on `η(q, h, eps)` from the recursion
/// `η(q, h+1, eps) >= (eps^4 q^{-h^2} η(q, h, eps/2))^{⌈q^{4h}/eps⌉}`, `η(q, 1, ·) = 1`.
pub fn eta_recursive_bound(q: usize, h: usize, eps: &BigRational) -> Result<EtaBound> {
    if q < 2 || h < 1 {
        return Err(Error::InvalidInput(format!("need q >= 2 and h >= 1, got q = {q}, h = {h}")));
    }
    if !eps.is_positive() || *eps > ratio(1, 9) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 1/9]")));
    }
    if eps.numer().to_u64().is_none() || eps.denom().to_u64().is_none() {
        return Err(Error::InvalidInput("eps must have a 64-bit numerator and denominator".into()));
    }
    Ok(eta_bound_unchecked(q, h, eps))
}

/// Decides `η_rec(q, h, eps) >= q^{-q^{4h^2}/eps^{2h}}` by comparing certified
/// enclosures of both natural logarithms.
pub fn eta_dominates_closed_form(q: usize, h: usize, eps: &BigRational) -> Result<bool> {
    let eta = eta_recursive_bound(q, h, eps)?;
    let c = from_uint(&num::pow(BigUint::from(q), 4 * h * h)) / rational::pow(eps, 2 * h);
    // ln η_rec + C ln q >= 0
    let gap = eta.ln().add(&ln_int(q as u64).scale(&c));
    if gap.lo >= BigRational::zero() {
        Ok(true)
    } else if gap.hi < BigRational::zero() {
        Ok(false)
    } else {
        Err(Error::Precondition("the logarithm enclosures are too wide to decide".into()))
    }
}

/// Which search produced the blowup in [`ramsey_blowup`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RamseyRoute {
    /// Rich clique inflation, then the partite search on its parts.
    Inflation,
    /// Direct search in a color class graph.
    ColorClass,
    /// One-vertex pattern: any vertices form a blowup.
    Trivial,
}

#[derive(Clone, Debug)]
pub struct RamseyReport {
    pub color: usize,
    pub witness: BlowupWitness,
    pub route: RamseyRoute,
    pub rich: Option<RichSearch>,
}

/// A monochromatic blowup of the pattern: a rich `K_h` inflation in some color
/// followed by the partite search in that color. Adaptive mode also searches
/// every color class directly when the first route stays below `k_target`,
/// and keeps the larger witness.
pub fn ramsey_blowup<R: Rng>(
    coloring: &Coloring,
    pattern: &Pattern,
    k_target: usize,
    mode: Mode,
    rng: &mut R,
    opts: &RamseyOptions,
) -> Result<RamseyReport> {
    let h = pattern.vertex_count();
    let n = coloring.vertex_count();
    if h == 1 {
        let k = k_target.clamp(1, n.max(1));
        if n == 0 {
            return Err(Error::InvalidInput("the coloring has no vertices".into()));
        }
        return Ok(RamseyReport {
            color: 0,
            witness: BlowupWitness::new(vec![(0..k).collect()]),
            route: RamseyRoute::Trivial,
            rich: None,
        });
    }
    let eps = ratio(1, 10);
    let mut best: Option<RamseyReport> = None;
    let first = find_monochromatic_rich_inflation(coloring, h, &eps, mode, rng, opts).and_then(|search| {
        let c = search.rich.color;
        let g = coloring.class_graph(c);
        let w = find_blowup_partite(g, pattern, search.rich.parts(), mode, rng, &opts.finder)?;
        Ok(RamseyReport {
            color: c,
            witness: w,
            route: RamseyRoute::Inflation,
            rich: Some(search),
        })
    });
    match first {
        Ok(r) => best = Some(r),
        Err(e @ Error::InvariantViolation(_)) => return Err(e),
        Err(e) if mode == Mode::Guaranteed => return Err(e),
        Err(_) => {}
    }
    if mode == Mode::Adaptive && best.as_ref().is_none_or(|b| b.witness.k < k_target) {
        for c in 0..coloring.color_count() {
            let g = coloring.class_graph(c);
            let Ok(rep) = find_blowup(g, pattern, Mode::Adaptive, rng, &opts.finder) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| rep.witness.k > b.witness.k) {
                best = Some(RamseyReport {
                    color: c,
                    witness: rep.witness,
                    route: RamseyRoute::ColorClass,
                    rich: best.and_then(|b| b.rich),
                });
            }
        }
    }
    let report = best.ok_or_else(|| Error::NoCopy("no color class contains the pattern".into()))?;
    let check = verify_blowup(coloring.class_graph(report.color), pattern, &report.witness);
    if !check.valid {
        return Err(Error::InvariantViolation(format!(
            "monochromatic witness failed verification: {:?}",
            check.violation
        )));
    }
    Ok(report)
}

/// Largest `k` any witness could reach from rich parts: the smallest part.
pub fn inflation_ceiling(rich: &RichInflation) -> usize {
    rich.certificate.min_part_size
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_random_coloring, rng};

    fn two_color_blocks(n: usize) -> Coloring {
        // Color 0 inside the halves, color 1 across.
        Coloring::from_fn(n, 2, |u, v| usize::from((u < n / 2) != (v < n / 2))).unwrap()
    }

    #[test]
    fn pigeonhole_examples() {
        let mono = Coloring::monochromatic(6, 2, 0).unwrap();
        let r = pigeonhole_base(&mono).unwrap();
        assert_eq!(r.color, 0);
        assert_eq!(r.parts()[0].count(), 6);
        // A star in color 0 and a triangle in color 1: three edges each.
        let balanced = Coloring::from_fn(4, 2, |u, _| usize::from(u != 0)).unwrap();
        assert_eq!(balanced.class_sizes(), vec![3, 3]);
        assert_eq!(pigeonhole_base(&balanced).unwrap().color, 0);
        let c = gen_random_coloring(30, 3, 7).unwrap();
        let r = pigeonhole_base(&c).unwrap();
        assert!(c.class_sizes()[r.color] >= 145);
        assert!(pigeonhole_base(&Coloring::monochromatic(1, 2, 0).unwrap()).is_err());
    }

    #[test]
    fn dense_to_bipartite_examples() {
        let k = Graph::complete(40);
        let all = k.all_vertices();
        for mode in [Mode::Guaranteed, Mode::Adaptive] {
            let s = dense_to_bipartite(&k, &all, &BigRational::one(), &ratio(1, 2), mode, &mut rng(1), 32).unwrap();
            assert!(s.a.is_disjoint(&s.b));
            assert!(s.sizes_met);
            for y in s.b.iter() {
                assert!(2 * k.degree_into(y, &s.a) >= s.a.count());
            }
        }
        assert!(matches!(
            dense_to_bipartite(&Graph::empty(5), &BitSet::full(5), &BigRational::zero(), &ratio(1, 2), Mode::Adaptive, &mut rng(0), 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn complement_increment_examples() {
        let p = ratio(1, 2);
        // X* empty: boost 1.
        let b = complement_increment(10, 0, &p, &BigRational::one(), &[DegreeRow { vertex: 0, total: 5, into_xstar: 0 }]).unwrap();
        assert_eq!(b, BigRational::one());
        // d(y) = p|X|, nothing into a half-size X*: boost 1 + 1/2.
        let b = complement_increment(10, 5, &p, &BigRational::one(), &[DegreeRow { vertex: 3, total: 5, into_xstar: 0 }]).unwrap();
        assert_eq!(b, ratio(3, 2));
        let err = complement_increment(10, 5, &p, &ratio(1, 2), &[DegreeRow { vertex: 7, total: 5, into_xstar: 4 }]).unwrap_err();
        assert!(err.to_string().contains("vertex 7"));
    }

    #[test]
    fn rich_increment_extends_for_one_part_and_complete_graphs() {
        let mono = Coloring::monochromatic(12, 2, 1).unwrap();
        let half = ratio(1, 2);
        let eps = ratio(1, 10);
        let v1 = BitSet::from_indices(12, 0..4);
        let x = BitSet::from_indices(12, 4..8);
        let out = rich_increment(&mono, 1, std::slice::from_ref(&v1), &x, &BigRational::one(), &half, &eps, &mut rng(0), &RamseyOptions::default()).unwrap();
        assert!(matches!(out, IncrementOutcome::Extended(ref r) if r.eps == ratio(1, 5)));
        let v2 = BitSet::from_indices(12, 8..12);
        let out = rich_increment(&mono, 1, &[v1, v2], &x, &half, &half, &eps, &mut rng(0), &RamseyOptions::default()).unwrap();
        assert!(matches!(out, IncrementOutcome::Extended(_)));
    }

    /// `V_1`, `V_2` cliques complete to each other; `V_1` is complete to
    /// `X_a` only and `V_2` to `X_b` only, so no clique uses `X`.
    fn engineered(m: usize, xa: usize, xb: usize) -> (Coloring, Vec<BitSet>, BitSet) {
        let n = 2 * m + xa + xb;
        let v1 = 0..m;
        let v2 = m..2 * m;
        let a = 2 * m..2 * m + xa;
        let b = 2 * m + xa..n;
        let c = Coloring::from_fn(n, 2, |u, v| {
            let both = |r: &std::ops::Range<usize>, s: &std::ops::Range<usize>| {
                (r.contains(&u) && s.contains(&v)) || (r.contains(&v) && s.contains(&u))
            };
            let red = both(&v1, &v1) || both(&v2, &v2) || both(&v1, &v2) || both(&v1, &a) || both(&v2, &b);
            usize::from(!red)
        })
        .unwrap();
        let parts = vec![BitSet::from_indices(n, v1), BitSet::from_indices(n, v2)];
        (c, parts, BitSet::from_indices(n, 2 * m..n))
    }

    #[test]
    fn engineered_increment_verifies() {
        let (c, parts, x) = engineered(6, 6, 6);
        let half = ratio(1, 2);
        let out = rich_increment(&c, 0, &parts, &x, &half, &half, &ratio(1, 10), &mut rng(0), &RamseyOptions::default()).unwrap();
        let IncrementOutcome::Increment(inc) = out else {
            panic!("extension should fail");
        };
        let g = c.class_graph(0);
        assert!(inc.x_prime.is_subset(&x));
        assert!(inc.y_prime.is_subset(&parts[inc.i_star]));
        for y in inc.y_prime.iter() {
            assert!(int(g.degree_into(y, &inc.x_prime) as u64) >= &inc.boost * &half * int(inc.x_prime.count() as u64));
        }
        assert!(inc.p_prime > half);
    }

    #[test]
    fn process_on_block_coloring() {
        let c = two_color_blocks(64);
        let r = find_monochromatic_rich_inflation(&c, 2, &ratio(1, 10), Mode::Adaptive, &mut rng(3), &RamseyOptions::default()).unwrap();
        let st = r.state.unwrap();
        assert!(st.t <= st.round_bound);
        assert_eq!(r.rich.h(), 2);
        let (edges, cert) = measure_rich(&c, r.rich.color, r.rich.parts()).unwrap();
        assert!(rich_holds(edges, &cert, &r.rich.rho, &r.rich.eps));
    }

    #[test]
    fn process_on_monochromatic_coloring() {
        let c = Coloring::monochromatic(200, 2, 1).unwrap();
        let r = find_monochromatic_rich_inflation(&c, 3, &ratio(1, 10), Mode::Adaptive, &mut rng(0), &RamseyOptions::default()).unwrap();
        assert_eq!(r.rich.color, 1);
        assert_eq!(r.rich.certificate.gamma, BigRational::one());
        assert!(r.state.unwrap().t <= 3);
    }

    #[test]
    fn guaranteed_mode_runs_for_k2() {
        let c = gen_random_coloring(120, 2, 5).unwrap();
        let r = find_monochromatic_rich_inflation(&c, 2, &ratio(1, 9), Mode::Guaranteed, &mut rng(5), &RamseyOptions::default());
        match r {
            Ok(r) => assert_eq!(r.rich.h(), 2),
            Err(e) => assert!(matches!(e, Error::BudgetExhausted(_) | Error::Precondition(_)), "{e}"),
        }
    }

    #[test]
    fn eta_examples() {
        let eps = ratio(1, 9);
        assert_eq!(eta_recursive_bound(2, 1, &eps).unwrap().exact(64).unwrap(), BigRational::one());
        let e = eta_recursive_bound(2, 2, &eps).unwrap();
        let expected = rational::pow(&(rational::pow(&eps, 4) * ratio(1, 2)), 144);
        assert_eq!(e.exact(10_000).unwrap(), expected);
        assert!((e.log2() - rational::log2(&expected)).abs() < 1e-6);
        for q in [2, 3] {
            for h in 1..=3 {
                assert!(eta_dominates_closed_form(q, h, &eps).unwrap(), "q={q} h={h}");
            }
        }
        assert!(eta_recursive_bound(1, 2, &eps).is_err());
        assert!(eta_recursive_bound(2, 2, &ratio(1, 5)).is_err());
    }

    #[test]
    fn ramsey_blowup_examples() {
        let opts = RamseyOptions::default();
        let k8 = Coloring::monochromatic(8, 1, 0).unwrap();
        let k2 = Pattern::builtin("k2").unwrap();
        let r = ramsey_blowup(&k8, &k2, 2, Mode::Adaptive, &mut rng(0), &opts).unwrap();
        assert!(r.witness.k >= 2);
        let c5 = Pattern::builtin("c5").unwrap();
        let k50 = Coloring::monochromatic(50, 2, 0).unwrap();
        let r = ramsey_blowup(&k50, &c5, 10, Mode::Adaptive, &mut rng(1), &opts).unwrap();
        assert_eq!(r.witness.k, 10);
        assert_eq!(r.color, 0);
    }
}
