//! Large blowups of triangle-free patterns via dependent random choice.
//!
//! One inductive step samples `s` tuples from the parts not adjacent to the
//! eliminated pattern vertex `h`, intersects neighbourhoods to get product
//! sets `S_i` for the neighbours of `h`, and keeps the sampled final
//! coordinates as a class complete to every `S_i`. Recursing on the smaller
//! pattern builds the blowup one class at a time.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, BigUint, One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::counting::{
    count_canonical_with_degrees, count_labeled_copies, find_canonical_copy, find_labeled_copy,
    gamma_degrees, inflation_density,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::parts::{size_product, BlowupWitness, InflationCertificate, PartSystem};
use crate::pattern::Pattern;
use crate::rational::{self, from_uint, int, ratio};

/// Guaranteed mode enforces every threshold of the inductive step and fails
/// loudly when one is unmet; adaptive mode searches for the best outcome a
/// budget allows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Guaranteed,
    Adaptive,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Guaranteed => "guaranteed",
            Mode::Adaptive => "adaptive",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "guaranteed" => Ok(Mode::Guaranteed),
            "adaptive" => Ok(Mode::Adaptive),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

/// Search budgets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinderOptions {
    /// Las Vegas retry budget for every resampling loop.
    pub retries: usize,
    /// Adaptive mode: draws per sample size `s`.
    pub samples_per_s: usize,
    /// Adaptive mode: largest sample size in the doubling schedule.
    pub max_s: usize,
    /// Adaptive mode: independent runs of the whole recursion.
    pub restarts: usize,
    /// Adaptive mode: random partitions tried by [`find_blowup`].
    pub partitions: usize,
}

impl Default for FinderOptions {
    fn default() -> Self {
        Self {
            retries: 64,
            samples_per_s: 8,
            max_s: 64,
            restarts: 6,
            partitions: 16,
        }
    }
}

/// Pattern constants of the inductive argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuaranteeConstants {
    pub h: usize,
    /// `C = max(1, 8 t)` for the eliminated degree `t` of every step, first step first.
    pub c_levels: Vec<u64>,
    pub beta: BigRational,
    pub alpha: BigRational,
    pub lambda: BigRational,
    /// `(100 h)^{-h}`.
    pub beta_lower_h: BigRational,
    /// `(100 d)^{-h}` for the largest eliminated degree `d` of the order (absent when `d = 0`).
    pub beta_lower_d: Option<BigRational>,
}

impl GuaranteeConstants {
    /// `C` for the first elimination step.
    pub fn c_h(&self) -> u64 {
        self.c_levels.first().copied().unwrap_or(1)
    }
}

fn inv_pow(base: u64, exp: usize) -> BigRational {
    BigRational::new(BigInt::one(), num::pow(BigInt::from(base), exp))
}

/// Evaluates the `β` recursion along the pattern's elimination order.
pub fn compute_constants(pattern: &Pattern) -> GuaranteeConstants {
    let h = pattern.vertex_count();
    let degrees = pattern.elimination_degrees();
    let c_levels: Vec<u64> = degrees.iter().map(|&t| (8 * t as u64).max(1)).collect();
    // Build up from one vertex: the last elimination step acts on K_1.
    let mut beta = BigRational::one();
    for size in 2..=h {
        let c = c_levels[h - size];
        let cap = ratio(1, 16 * size as u64);
        beta = rational::min(cap, beta / int(2 * c));
    }
    // For h >= 2 we have beta <= 1/(16h), so beta/h < 1/(2 log h); for h = 1
    // the log term is unbounded. Either way alpha = beta/h.
    let alpha = &beta / int(h.max(1) as u64);
    let lambda = int(2 * (h * h) as u64) / &beta;
    let d = degrees.iter().copied().max().unwrap_or(0);
    GuaranteeConstants {
        h,
        c_levels,
        beta_lower_h: inv_pow(100 * h as u64, h),
        beta_lower_d: (d > 0).then(|| inv_pow(100 * d as u64, h)),
        beta,
        alpha,
        lambda,
    }
}

/// Per-call values of one inductive step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepParameters {
    /// `γ` clamped to at most `1/2`.
    pub gamma: BigRational,
    pub n: u64,
    /// Smallest `s ≥ 0` with `γ^{4s} n ≤ 1`, i.e. `⌈log n / (4 log(1/γ))⌉`.
    pub s: usize,
    pub gamma_prime: BigRational,
    /// `⌈√n⌉`: the integer form of the part-size floor `√n`.
    pub n_prime: u64,
    /// Whether `n ≥ γ^{-16h}`.
    pub meets_precondition: bool,
}

impl StepParameters {
    /// Exact check of `n^{-1/3} ≤ γ^s ≤ n^{-1/4}`.
    pub fn sample_bounds_hold(&self) -> bool {
        let n = int(self.n);
        let lower = rational::pow(&self.gamma, 3 * self.s) * &n >= BigRational::one();
        let upper = rational::pow(&self.gamma, 4 * self.s) * &n <= BigRational::one();
        lower && upper
    }
}

fn clamp_gamma(gamma: &BigRational) -> BigRational {
    rational::min(gamma.clone(), ratio(1, 2))
}

fn ceil_sqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while r * r < n {
        r += 1;
    }
    r
}

pub fn step_parameters(gamma: &BigRational, n: u64, h: usize, c_h: u64) -> Result<StepParameters> {
    if *gamma <= BigRational::zero() {
        return Err(Error::InvalidInput("density must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("part size must be positive".into()));
    }
    let gamma = clamp_gamma(gamma);
    let nn = int(n);
    let g4 = rational::pow(&gamma, 4);
    let mut s = 0;
    let mut acc = nn.clone();
    while acc > BigRational::one() {
        acc *= &g4;
        s += 1;
    }
    let meets_precondition = rational::pow(&gamma, 16 * h) * &nn >= BigRational::one();
    Ok(StepParameters {
        gamma_prime: rational::pow(&gamma, c_h as usize),
        gamma,
        n,
        s,
        n_prime: ceil_sqrt(n),
        meets_precondition,
    })
}

/// A part system with its certificate and how the Las Vegas loop ended.
#[derive(Clone, Debug)]
pub struct SampledParts {
    pub certificate: InflationCertificate,
    pub attempts: usize,
    /// False when the retry budget ran out; the best attempt is returned.
    pub met_target: bool,
}

impl SampledParts {
    pub fn parts(&self) -> &PartSystem {
        &self.certificate.parts
    }
}

fn equitable_split(order: &[usize], h: usize, n: usize) -> Vec<BitSet> {
    let base = order.len() / h;
    let extra = order.len() % h;
    let mut parts = Vec::with_capacity(h);
    let mut start = 0;
    for i in 0..h {
        let len = base + usize::from(i < extra);
        parts.push(BitSet::from_indices(n, order[start..start + len].iter().copied()));
        start += len;
    }
    parts
}

/// Resamples uniform equitable `h`-partitions of `V(G)` until one has at
/// least `target` canonical copies.
pub fn random_equitable_partition<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    rng: &mut R,
    target: &BigRational,
    max_retries: usize,
) -> Result<SampledParts> {
    let h = pattern.vertex_count();
    let n = g.vertex_count();
    if n < h {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} vertices into {h} nonempty parts"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<InflationCertificate> = None;
    for attempt in 1..=max_retries.max(1) {
        order.shuffle(rng);
        let cert = inflation_density(g, pattern, &equitable_split(&order, h, n))?;
        let hit = from_uint(&cert.canonical_count) >= *target;
        if best
            .as_ref()
            .is_none_or(|b| cert.canonical_count > b.canonical_count)
        {
            best = Some(cert);
        }
        if hit {
            return Ok(SampledParts {
                certificate: best.expect("just set"),
                attempts: attempt,
                met_target: true,
            });
        }
    }
    Ok(SampledParts {
        certificate: best.expect("at least one attempt"),
        attempts: max_retries.max(1),
        met_target: false,
    })
}

/// Resamples size-`n` subsets of every part until the density of the input
/// is matched.
pub fn subsample_inflation<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    n: usize,
    rng: &mut R,
    max_retries: usize,
) -> Result<SampledParts> {
    let input = inflation_density(g, pattern, parts)?;
    if let Some(i) = parts.iter().position(|p| p.count() < n) {
        return Err(Error::InvalidInput(format!("part {i} has fewer than {n} vertices")));
    }
    if parts.iter().all(|p| p.count() == n) {
        return Ok(SampledParts {
            certificate: input,
            attempts: 0,
            met_target: true,
        });
    }
    let target = &input.gamma * int(n as u64).pow(pattern.vertex_count() as i32);
    let lists: Vec<Vec<usize>> = parts.iter().map(BitSet::to_vec).collect();
    let universe = g.vertex_count();
    let mut best: Option<InflationCertificate> = None;
    for attempt in 1..=max_retries.max(1) {
        let sub: Vec<BitSet> = lists
            .iter()
            .map(|l| BitSet::from_indices(universe, l.choose_multiple(rng, n).copied()))
            .collect();
        let cert = inflation_density(g, pattern, &sub)?;
        let hit = from_uint(&cert.canonical_count) >= target;
        if best
            .as_ref()
            .is_none_or(|b| cert.canonical_count > b.canonical_count)
        {
            best = Some(cert);
        }
        if hit {
            return Ok(SampledParts {
                certificate: best.expect("just set"),
                attempts: attempt,
                met_target: true,
            });
        }
    }
    Ok(SampledParts {
        certificate: best.expect("at least one attempt"),
        attempts: max_retries.max(1),
        met_target: false,
    })
}

/// The two sides of the auxiliary bipartite graph for the eliminated vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuxSides {
    /// Neighbours of the eliminated vertex, ascending.
    pub a_vars: Vec<usize>,
    /// All other pattern vertices, ascending; includes the eliminated vertex.
    pub b_vars: Vec<usize>,
    pub eliminated: usize,
}

pub fn aux_sides(pattern: &Pattern) -> AuxSides {
    let last = pattern.eliminated();
    let a_vars: Vec<usize> = pattern.neighbors(last).collect();
    let b_vars = (0..pattern.vertex_count())
        .filter(|v| !a_vars.contains(v))
        .collect();
    AuxSides {
        a_vars,
        b_vars,
        eliminated: last,
    }
}

/// Draws `s` tuples uniformly (with repetition) from `∏_{j ∈ b_vars} V_j`.
pub fn sample_b<R: Rng>(parts: &[BitSet], sides: &AuxSides, s: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let lists: Vec<Vec<usize>> = sides.b_vars.iter().map(|&j| parts[j].to_vec()).collect();
    (0..s)
        .map(|_| lists.iter().map(|l| l[rng.gen_range(0..l.len())]).collect())
        .collect()
}

/// Whether the tuple spans a canonical copy of the pattern induced on `b_vars`.
pub fn b_is_copy(g: &Graph, pattern: &Pattern, sides: &AuxSides, b: &[usize]) -> bool {
    sides.b_vars.iter().enumerate().all(|(x, &i)| {
        sides.b_vars[x + 1..]
            .iter()
            .enumerate()
            .all(|(y, &j)| !pattern.has_edge(i, j) || g.has_edge(b[x], b[x + 1 + y]))
    })
}

/// `S_i = V_i ∩ ⋂_{ℓ, j ∈ N(i)} N((b_ℓ)_j)` for every `i` in `a_vars`.
pub fn product_sets(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    sides: &AuxSides,
    samples: &[Vec<usize>],
) -> Vec<BitSet> {
    sides
        .a_vars
        .iter()
        .map(|&i| {
            let mut set = parts[i].clone();
            for b in samples {
                for (x, &j) in sides.b_vars.iter().enumerate() {
                    if pattern.has_edge(i, j) {
                        set.intersect_with(g.neighbors(b[x]));
                    }
                }
            }
            set
        })
        .collect()
}

/// Diagnostics of the accepted sample.
#[derive(Clone, Debug)]
pub struct SampleTrace {
    pub s: usize,
    pub sides: AuxSides,
    /// The sampled tuples, coordinates in `b_vars` order.
    pub samples: Vec<Vec<usize>>,
    /// `S_i` in `a_vars` order.
    pub s_sets: Vec<BitSet>,
    /// `|A'|`.
    pub x: BigUint,
    /// Tuples of `A'` with low auxiliary degree (guaranteed mode only).
    pub y: Option<u64>,
    /// Distinct final coordinates among the samples.
    pub distinct_final: usize,
    pub attempts: usize,
}

/// Result of one inductive step.
#[derive(Clone, Debug)]
pub struct InductiveStepOutput {
    pub t: usize,
    /// The class for the eliminated vertex.
    pub v_h_star: BitSet,
    /// Parts for `pattern.without_eliminated()`.
    pub reduced_parts: Vec<BitSet>,
    /// Certificate of `reduced_parts` for the reduced pattern.
    pub certificate: InflationCertificate,
    pub trace: SampleTrace,
}

fn reduced(parts: &[BitSet], eliminated: usize, sides: &AuxSides, s_sets: &[BitSet]) -> Vec<BitSet> {
    let mut out = parts.to_vec();
    for (&i, s) in sides.a_vars.iter().zip(s_sets) {
        out[i] = s.clone();
    }
    out.remove(eliminated);
    out
}

fn final_coordinates(samples: &[Vec<usize>], sides: &AuxSides, universe: usize) -> BitSet {
    let pos = sides
        .b_vars
        .iter()
        .position(|&j| j == sides.eliminated)
        .expect("eliminated vertex lies on the B side");
    BitSet::from_indices(universe, samples.iter().map(|b| b[pos]))
}

fn passthrough(g: &Graph, pattern: &Pattern, parts: &[BitSet]) -> Result<InductiveStepOutput> {
    let sides = aux_sides(pattern);
    let reduced_parts = reduced(parts, sides.eliminated, &sides, &[]);
    let certificate = inflation_density(g, &pattern.without_eliminated(), &reduced_parts)?;
    Ok(InductiveStepOutput {
        t: 0,
        v_h_star: parts[sides.eliminated].clone(),
        reduced_parts,
        certificate,
        trace: SampleTrace {
            s: 0,
            sides,
            samples: Vec::new(),
            s_sets: Vec::new(),
            x: BigUint::zero(),
            y: None,
            distinct_final: 0,
            attempts: 0,
        },
    })
}

fn product_size(sets: &[BitSet]) -> BigUint {
    size_product(sets)
}

/// One inductive step: a class for the eliminated vertex plus parts for the
/// reduced pattern, complete to it across every pattern edge.
pub fn inductive_step<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    mode: Mode,
    rng: &mut R,
    opts: &FinderOptions,
) -> Result<InductiveStepOutput> {
    if pattern.vertex_count() < 2 {
        return Err(Error::InvalidInput("nothing to eliminate from a one-vertex pattern".into()));
    }
    PartSystem::new(parts.to_vec())?;
    if pattern.eliminated_degree() == 0 {
        return passthrough(g, pattern, parts);
    }
    let out = match mode {
        Mode::Guaranteed => guaranteed_step(g, pattern, parts, rng, opts)?,
        Mode::Adaptive => adaptive_step(g, pattern, parts, rng, opts)?,
    };
    check_step(g, pattern, &out)?;
    Ok(out)
}

/// Re-verifies completeness between the new class and the neighbour parts.
fn check_step(g: &Graph, pattern: &Pattern, out: &InductiveStepOutput) -> Result<()> {
    for s in &out.trace.s_sets {
        for y in out.v_h_star.iter() {
            if !s.is_subset(g.neighbors(y)) {
                return Err(Error::InvariantViolation(format!(
                    "vertex {y} of the new class is not complete to its neighbour part"
                )));
            }
        }
    }
    let recount = inflation_density(g, &pattern.without_eliminated(), &out.reduced_parts)?;
    if recount.canonical_count != out.certificate.canonical_count {
        return Err(Error::InvariantViolation("reduced certificate does not recount".into()));
    }
    Ok(())
}

fn guaranteed_step<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    rng: &mut R,
    opts: &FinderOptions,
) -> Result<InductiveStepOutput> {
    let h = pattern.vertex_count();
    let t = pattern.eliminated_degree();
    let c_h = (8 * t as u64).max(1);
    let input = inflation_density(g, pattern, parts)?;
    if input.canonical_count.is_zero() {
        return Err(Error::NoCopy("the parts contain no canonical copy".into()));
    }
    let n = input.min_part_size as u64;
    let params = step_parameters(&input.gamma, n, h, c_h)?;
    if !params.meets_precondition {
        return Err(Error::Precondition(format!(
            "part size {n} is below γ^(-16h) for γ = {}",
            params.gamma
        )));
    }
    let sub = subsample_inflation(g, pattern, parts, n as usize, rng, opts.retries)?;
    if !sub.met_target {
        return Err(Error::BudgetExhausted("no subsample kept the density".into()));
    }
    let parts = sub.parts().to_vec();
    let sides = aux_sides(pattern);
    let universe = g.vertex_count();
    let b_size = size_product(
        &sides
            .b_vars
            .iter()
            .map(|&j| parts[j].clone())
            .collect::<Vec<_>>(),
    );
    let degree_floor = &params.gamma_prime * from_uint(&b_size);
    let x_floor = BigUint::from(n).pow(2 * t as u32 - 1);
    for attempt in 1..=opts.retries.max(1) {
        let samples = sample_b(&parts, &sides, params.s, rng);
        if !samples.iter().all(|b| b_is_copy(g, pattern, &sides, b)) {
            continue;
        }
        let s_sets = product_sets(g, pattern, &parts, &sides, &samples);
        let x = product_size(&s_sets);
        if &x * &x < x_floor {
            continue;
        }
        let finals = final_coordinates(&samples, &sides, universe);
        if 2 * finals.count() <= params.s {
            continue;
        }
        let mut restricted = parts.clone();
        for (&i, s) in sides.a_vars.iter().zip(&s_sets) {
            restricted[i] = s.clone();
        }
        let degrees = gamma_degrees(g, pattern, &restricted)?;
        let y = degrees
            .degrees
            .iter()
            .filter(|&&d| BigRational::from_integer(BigInt::from(d)) <= degree_floor)
            .count() as u64;
        if y > 0 {
            continue;
        }
        let reduced_parts = reduced(&parts, sides.eliminated, &sides, &s_sets);
        let certificate = inflation_density(g, &pattern.without_eliminated(), &reduced_parts)?;
        if certificate.gamma < params.gamma_prime {
            return Err(Error::InvariantViolation(format!(
                "reduced density {} is below γ' = {}",
                certificate.gamma, params.gamma_prime
            )));
        }
        if (certificate.min_part_size as u64) < params.n_prime {
            return Err(Error::InvariantViolation(format!(
                "reduced part size {} is below √n",
                certificate.min_part_size
            )));
        }
        return Ok(InductiveStepOutput {
            t,
            v_h_star: finals.clone(),
            reduced_parts,
            certificate,
            trace: SampleTrace {
                s: params.s,
                sides,
                samples,
                s_sets,
                x,
                y: Some(0),
                distinct_final: finals.count(),
                attempts: attempt,
            },
        });
    }
    Err(Error::BudgetExhausted(format!(
        "no sample met the acceptance conditions in {} attempts",
        opts.retries
    )))
}

/// Ranking of adaptive outcomes: bottleneck size first (the largest blowup
/// the outcome could still lead to), then reduced density, then class sizes.
type Score = (usize, BigRational, usize, usize);

fn adaptive_step<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    rng: &mut R,
    opts: &FinderOptions,
) -> Result<InductiveStepOutput> {
    let sides = aux_sides(pattern);
    let reduced_pattern = pattern.without_eliminated();
    let min_part = parts.iter().map(BitSet::count).min().unwrap_or(0);
    let mut best: Option<(Score, InductiveStepOutput)> = None;
    let mut attempts = 0;
    let mut s = 1;
    while s <= opts.max_s.max(1) {
        let mut any_valid = false;
        for _ in 0..opts.samples_per_s.max(1) {
            attempts += 1;
            let samples = sample_b(parts, &sides, s, rng);
            if !samples.iter().all(|b| b_is_copy(g, pattern, &sides, b)) {
                continue;
            }
            let s_sets = product_sets(g, pattern, parts, &sides, &samples);
            if s_sets.iter().any(BitSet::is_empty) {
                continue;
            }
            // Every vertex of V_h complete to all S_i may join the class; the
            // sampled final coordinates are among them.
            let mut class = parts[sides.eliminated].clone();
            for set in &s_sets {
                for x in set.iter() {
                    class.intersect_with(g.neighbors(x));
                }
            }
            let reduced_parts = reduced(parts, sides.eliminated, &sides, &s_sets);
            let certificate = inflation_density(g, &reduced_pattern, &reduced_parts)?;
            if certificate.canonical_count.is_zero() || class.is_empty() {
                continue;
            }
            any_valid = true;
            let min_s = s_sets.iter().map(BitSet::count).min().unwrap_or(0);
            let score: Score = (
                class.count().min(certificate.min_part_size),
                certificate.gamma.clone(),
                class.count(),
                min_s,
            );
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                let finals = final_coordinates(&samples, &sides, g.vertex_count());
                best = Some((
                    score,
                    InductiveStepOutput {
                        t: sides.a_vars.len(),
                        v_h_star: class,
                        reduced_parts,
                        certificate,
                        trace: SampleTrace {
                            s,
                            sides: sides.clone(),
                            x: product_size(&s_sets),
                            samples,
                            s_sets,
                            y: None,
                            distinct_final: finals.count(),
                            attempts,
                        },
                    },
                ));
            }
        }
        if !any_valid && s > 1 {
            break;
        }
        if best.as_ref().is_some_and(|((b, ..), _)| *b >= min_part) {
            break;
        }
        s *= 2;
    }
    best.map(|(_, out)| out).ok_or_else(|| {
        Error::BudgetExhausted(format!("no sample gave a nonempty product set in {attempts} draws"))
    })
}

fn single_copy(g: &Graph, pattern: &Pattern, parts: &[BitSet]) -> Result<Vec<BitSet>> {
    let copy = find_canonical_copy(g, pattern, parts)?
        .ok_or_else(|| Error::NoCopy("the parts contain no canonical copy".into()))?;
    let n = g.vertex_count();
    Ok(copy.into_iter().map(|v| BitSet::from_indices(n, [v])).collect())
}

/// Cross-complete classes (possibly of different sizes) inside the parts.
fn partite_classes<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    mode: Mode,
    rng: &mut R,
    opts: &FinderOptions,
) -> Result<Vec<BitSet>> {
    if pattern.vertex_count() == 1 {
        return Ok(vec![parts[0].clone()]);
    }
    if mode == Mode::Guaranteed {
        let cert = inflation_density(g, pattern, parts)?;
        if cert.canonical_count.is_zero() {
            return Err(Error::NoCopy("the parts contain no canonical copy".into()));
        }
        let c_h = compute_constants(pattern).c_h();
        let params = step_parameters(&cert.gamma, cert.min_part_size as u64, pattern.vertex_count(), c_h)?;
        if !params.meets_precondition {
            return single_copy(g, pattern, parts);
        }
    }
    let step = match inductive_step(g, pattern, parts, mode, rng, opts) {
        Ok(step) => step,
        Err(e @ (Error::InvariantViolation(_) | Error::GuardExceeded(_))) => return Err(e),
        Err(e) if mode == Mode::Guaranteed => return Err(e),
        Err(_) => return single_copy(g, pattern, parts),
    };
    let mut classes = match partite_classes(
        g,
        &pattern.without_eliminated(),
        &step.reduced_parts,
        mode,
        rng,
        opts,
    ) {
        Ok(c) => c,
        Err(e) if mode == Mode::Guaranteed => return Err(e),
        Err(_) => return single_copy(g, pattern, parts),
    };
    classes.insert(step.trace.sides.eliminated, step.v_h_star);
    Ok(classes)
}

/// Truncates classes to their common size, keeping the vertices with the
/// most canonical copies through them (ties by lowest index).
fn truncate(classes: &[BitSet], through: &std::collections::BTreeMap<usize, BigUint>) -> BlowupWitness {
    let k = classes.iter().map(BitSet::count).min().unwrap_or(0);
    let zero = BigUint::zero();
    let picked = classes
        .iter()
        .map(|c| {
            let mut vs: Vec<usize> = c.to_vec();
            vs.sort_by(|a, b| {
                let da = through.get(a).unwrap_or(&zero);
                let db = through.get(b).unwrap_or(&zero);
                db.cmp(da).then(a.cmp(b))
            });
            vs.truncate(k);
            vs
        })
        .collect();
    BlowupWitness::new(picked)
}

/// A blowup `H[k]` with class `i` inside part `i`.
pub fn find_blowup_partite<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    parts: &[BitSet],
    mode: Mode,
    rng: &mut R,
    opts: &FinderOptions,
) -> Result<BlowupWitness> {
    let top = count_canonical_with_degrees(g, pattern, parts)?;
    if top.count.is_zero() {
        return Err(Error::NoCopy("the parts contain no canonical copy".into()));
    }
    PartSystem::new(parts.to_vec())?;
    let through = top.per_part_degrees.expect("degrees requested");
    let runs = match mode {
        Mode::Guaranteed => 1,
        Mode::Adaptive => opts.restarts.max(1),
    };
    let ceiling = parts.iter().map(BitSet::count).min().unwrap_or(0);
    let mut best: Option<BlowupWitness> = None;
    for _ in 0..runs {
        let classes = partite_classes(g, pattern, parts, mode, rng, opts)?;
        let w = truncate(&classes, &through);
        if best.as_ref().is_none_or(|b| w.k > b.k) {
            best = Some(w);
        }
        if best.as_ref().is_some_and(|b| b.k >= ceiling) {
            break;
        }
    }
    Ok(best.expect("at least one run"))
}

/// How [`find_blowup`] produced its witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Random equitable partition followed by the partite search.
    Partition,
    /// Parts grown around one copy: vertex `u` may join class `i` when it is
    /// adjacent to the copy's image of every neighbour of `i`.
    Seeded,
    /// No partition had a canonical copy; a single labeled copy was returned.
    SingleCopy,
}

#[derive(Clone, Debug)]
pub struct FindReport {
    pub witness: BlowupWitness,
    pub mode: Mode,
    pub labeled_count: BigUint,
    /// `labeled_count / n^h`.
    pub gamma: BigRational,
    /// `⌊α log n / log(1/γ)⌋` with `γ` clamped to at most `1/2`.
    pub k_theory: u64,
    /// Certificate of the partition that produced the witness.
    pub certificate: Option<InflationCertificate>,
    pub partitions_tried: usize,
    pub route: Route,
}

/// `⌊α log n / log(1/γ)⌋`, evaluated in floating point (`α` and `γ` are
/// exact, the logarithms are not).
pub fn k_theory(alpha: &BigRational, n: u64, gamma: &BigRational) -> u64 {
    if n < 2 || *gamma <= BigRational::zero() {
        return 0;
    }
    let g = clamp_gamma(gamma);
    let v = rational::to_f64(alpha) * (n as f64).log2() / -rational::log2(&g);
    (v + 1e-12).floor().max(0.0) as u64
}

/// A blowup of the pattern anywhere in `G`.
pub fn find_blowup<R: Rng>(
    g: &Graph,
    pattern: &Pattern,
    mode: Mode,
    rng: &mut R,
    opts: &FinderOptions,
) -> Result<FindReport> {
    let h = pattern.vertex_count();
    let n = g.vertex_count();
    let labeled = count_labeled_copies(g, pattern)?;
    if labeled.is_zero() {
        return Err(Error::NoCopy(format!("the graph has no copy of {}", pattern.name())));
    }
    let gamma = BigRational::new(labeled.clone().into(), BigInt::from(n).pow(h as u32));
    let constants = compute_constants(pattern);
    let k_th = k_theory(&constants.alpha, n as u64, &gamma);
    let single = |tried| -> Result<FindReport> {
        let copy = find_labeled_copy(g, pattern).expect("a labeled copy exists");
        Ok(FindReport {
            witness: BlowupWitness::from_copy(&copy),
            mode,
            labeled_count: labeled.clone(),
            gamma: gamma.clone(),
            k_theory: k_th,
            certificate: None,
            partitions_tried: tried,
            route: Route::SingleCopy,
        })
    };
    if mode == Mode::Guaranteed && n < h * h {
        return single(0);
    }
    let tries = match mode {
        Mode::Guaranteed => 1,
        Mode::Adaptive if n <= 100 => opts.partitions.max(1) * 4,
        Mode::Adaptive => opts.partitions.max(1),
    };
    let ceiling = n / h;
    let mut best: Option<(BlowupWitness, InflationCertificate, Route)> = None;
    let mut seeds: Vec<Vec<usize>> = Vec::new();
    let mut tried = 0;
    for _ in 0..tries {
        tried += 1;
        // Sizes differ by at most one; the target is γ ∏|V_i|, which the
        // expectation argument guarantees for any part sizes.
        let probe = equitable_split(&(0..n).collect::<Vec<_>>(), h, n);
        let target = &gamma * from_uint(&size_product(&probe));
        let sampled = random_equitable_partition(g, pattern, rng, &target, opts.retries)?;
        if mode == Mode::Guaranteed && !sampled.met_target {
            return Err(Error::BudgetExhausted(
                "no equitable partition reached the expected canonical count".into(),
            ));
        }
        let cert = sampled.certificate;
        if cert.canonical_count.is_zero() {
            continue;
        }
        if mode == Mode::Adaptive && seeds.len() < opts.restarts {
            seeds.extend(find_canonical_copy(g, pattern, &cert.parts)?);
        }
        let w = find_blowup_partite(g, pattern, &cert.parts, mode, rng, opts)?;
        if best.as_ref().is_none_or(|(b, _, _)| w.k > b.k) {
            best = Some((w, cert, Route::Partition));
        }
        if best.as_ref().is_some_and(|(b, _, _)| b.k >= ceiling) {
            break;
        }
    }
    for copy in seeds {
        if best.as_ref().is_some_and(|(b, _, _)| b.k >= ceiling) {
            break;
        }
        let parts = seeded_parts(g, pattern, &copy, rng);
        let cert = inflation_density(g, pattern, &parts)?;
        let w = find_blowup_partite(g, pattern, &parts, mode, rng, opts)?;
        if best.as_ref().is_none_or(|(b, _, _)| w.k > b.k) {
            best = Some((w, cert, Route::Seeded));
        }
    }
    let Some((witness, cert, route)) = best else {
        return single(tried);
    };
    if mode == Mode::Guaranteed && (witness.k as u64) < k_th {
        return Err(Error::InvariantViolation(format!(
            "found k = {} below the guaranteed {k_th}",
            witness.k
        )));
    }
    Ok(FindReport {
        witness,
        mode,
        labeled_count: labeled,
        gamma,
        k_theory: k_th,
        certificate: Some(cert),
        partitions_tried: tried,
        route,
    })
}

/// Disjoint parts around a copy: each vertex joins a uniformly random class
/// among those whose pattern neighbours all map into its neighbourhood.
/// Copy vertices keep their own class, so the copy stays canonical.
fn seeded_parts<R: Rng>(g: &Graph, pattern: &Pattern, copy: &[usize], rng: &mut R) -> Vec<BitSet> {
    let n = g.vertex_count();
    let mut parts = vec![BitSet::new(n); copy.len()];
    for (i, &v) in copy.iter().enumerate() {
        parts[i].insert(v);
    }
    let mut eligible = Vec::with_capacity(copy.len());
    for u in (0..n).filter(|u| !copy.contains(u)) {
        eligible.clear();
        eligible.extend((0..copy.len()).filter(|&i| pattern.neighbors(i).all(|j| g.has_edge(u, copy[j]))));
        if let Some(&i) = eligible.choose(rng) {
            parts[i].insert(u);
        }
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::count_canonical_copies;
    use crate::generate::{blowup_classes, gen_blowup, gen_gnp, rng};
    use crate::oracle::verify_blowup;

    #[test]
    fn constants_for_small_patterns() {
        let k2 = compute_constants(&Pattern::builtin("k2").unwrap());
        assert_eq!(k2.c_h(), 8);
        assert_eq!(k2.beta, ratio(1, 32));
        assert_eq!(k2.alpha, ratio(1, 64));
        assert_eq!(k2.lambda, int(8 * 32));
        let k1 = compute_constants(&Pattern::builtin("k1").unwrap());
        assert_eq!(k1.beta, BigRational::one());
        for name in ["p3", "p4", "c4", "c5", "petersen"] {
            let c = compute_constants(&Pattern::builtin(name).unwrap());
            assert!(c.beta >= c.beta_lower_h, "{name}");
            assert!(c.beta >= *c.beta_lower_d.as_ref().unwrap(), "{name}");
            assert!(c.alpha <= c.beta);
        }
    }

    #[test]
    fn sample_size_is_the_ceiling() {
        // γ = 1/2, n = 2^40: log n / (4 log 2) = 10.
        let p = step_parameters(&ratio(1, 2), 1 << 40, 2, 8).unwrap();
        assert_eq!(p.s, 10);
        assert!(p.meets_precondition);
        assert!(p.sample_bounds_hold());
        let p = step_parameters(&ratio(1, 2), (1 << 40) + 1, 2, 8).unwrap();
        assert_eq!(p.s, 11);
        // γ > 1/2 is clamped.
        let p = step_parameters(&ratio(9, 10), 1 << 20, 1, 1).unwrap();
        assert_eq!(p.gamma, ratio(1, 2));
        assert_eq!(p.s, 5);
        assert!(!step_parameters(&ratio(1, 2), 1000, 2, 8).unwrap().meets_precondition);
        assert_eq!(p.n_prime, 1024);
    }

    #[test]
    fn equitable_partition_examples() {
        let k2 = Pattern::builtin("k2").unwrap();
        let g = Graph::complete(2);
        let mut r = rng(1);
        let out = random_equitable_partition(&g, &k2, &mut r, &ratio(1, 2), 64).unwrap();
        assert!(out.met_target);
        assert_eq!(out.certificate.canonical_count, BigUint::one());
        let empty = Graph::empty(6);
        let out = random_equitable_partition(&empty, &k2, &mut r, &ratio(1, 2), 8).unwrap();
        assert!(!out.met_target);
        assert!(out.certificate.gamma.is_zero());
    }

    #[test]
    fn subsample_examples() {
        let k2 = Pattern::builtin("k2").unwrap();
        let g = gen_blowup(&k2, 5).unwrap();
        let parts = blowup_classes(2, 5);
        let mut r = rng(2);
        let same = subsample_inflation(&g, &k2, &parts, 5, &mut r, 10).unwrap();
        assert_eq!(same.attempts, 0);
        assert_eq!(same.parts().to_vec(), parts);
        let sub = subsample_inflation(&g, &k2, &parts, 3, &mut r, 10).unwrap();
        assert!(sub.met_target);
        assert_eq!(sub.certificate.gamma, BigRational::one());
        assert_eq!(sub.certificate.min_part_size, 3);
    }

    #[test]
    fn adaptive_step_on_complete_bipartite() {
        let k2 = Pattern::builtin("k2").unwrap();
        let g = gen_blowup(&k2, 8).unwrap();
        let parts = blowup_classes(2, 8);
        let out = inductive_step(&g, &k2, &parts, Mode::Adaptive, &mut rng(3), &FinderOptions::default())
            .unwrap();
        let last = k2.eliminated();
        assert_eq!(out.reduced_parts, vec![parts[1 - last].clone()]);
        assert_eq!(out.certificate.gamma, BigRational::one());
        assert_eq!(out.v_h_star, parts[last]);
    }

    #[test]
    fn adaptive_step_on_path_blowup() {
        // Path 0-1-2; the order eliminates an endpoint.
        let p3 = Pattern::builtin("p3").unwrap();
        let g = gen_blowup(&p3, 3).unwrap();
        let parts = blowup_classes(3, 3);
        let out = inductive_step(&g, &p3, &parts, Mode::Adaptive, &mut rng(4), &FinderOptions::default())
            .unwrap();
        let last = p3.eliminated();
        assert_eq!(out.t, 1);
        assert!(out.v_h_star.is_subset(&parts[last]));
        assert_eq!(out.trace.s_sets, vec![parts[1].clone()]);
        assert_eq!(out.certificate.gamma, BigRational::one());
    }

    #[test]
    fn isolated_vertex_passes_through() {
        let p = Pattern::with_order(
            "k2+k1",
            crate::SmallGraph::new(3, &[(0, 1)]).unwrap(),
            vec![0, 1, 2],
        )
        .unwrap();
        let g = Graph::from_edges(6, &[(0, 1), (0, 3), (1, 4)]).unwrap();
        let parts = vec![
            BitSet::from_indices(6, [0]),
            BitSet::from_indices(6, [1, 3]),
            BitSet::from_indices(6, [2, 5]),
        ];
        let out = inductive_step(&g, &p, &parts, Mode::Adaptive, &mut rng(0), &FinderOptions::default())
            .unwrap();
        assert_eq!(out.v_h_star, parts[2]);
        assert_eq!(out.reduced_parts, parts[..2].to_vec());
    }

    #[test]
    fn guaranteed_step_rejects_small_parts() {
        let k2 = Pattern::builtin("k2").unwrap();
        let g = gen_blowup(&k2, 8).unwrap();
        let err = inductive_step(&g, &k2, &blowup_classes(2, 8), Mode::Guaranteed, &mut rng(0), &FinderOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        // Below the threshold the partite search returns a single copy.
        let w = find_blowup_partite(&g, &k2, &blowup_classes(2, 8), Mode::Guaranteed, &mut rng(0), &FinderOptions::default())
            .unwrap();
        assert_eq!(w.k, 1);
        assert!(verify_blowup(&g, &k2, &w).valid);
    }

    #[test]
    fn partite_examples() {
        let opts = FinderOptions::default();
        let k2 = Pattern::builtin("k2").unwrap();
        let g = gen_blowup(&k2, 8).unwrap();
        let w = find_blowup_partite(&g, &k2, &blowup_classes(2, 8), Mode::Adaptive, &mut rng(5), &opts)
            .unwrap();
        assert_eq!(w.k, 8);
        let c5 = Pattern::builtin("c5").unwrap();
        let g = gen_blowup(&c5, 3).unwrap();
        let w = find_blowup_partite(&g, &c5, &blowup_classes(5, 3), Mode::Adaptive, &mut rng(6), &opts)
            .unwrap();
        assert_eq!(w.k, 3);
        assert!(verify_blowup(&g, &c5, &w).valid);
        let empty = Graph::empty(15);
        assert!(matches!(
            find_blowup_partite(&empty, &c5, &blowup_classes(5, 3), Mode::Adaptive, &mut rng(6), &opts),
            Err(Error::NoCopy(_))
        ));
    }

    #[test]
    fn whole_graph_examples() {
        let opts = FinderOptions::default();
        let c5 = Pattern::builtin("c5").unwrap();
        let g = gen_blowup(&c5, 1).unwrap();
        let rep = find_blowup(&g, &c5, Mode::Adaptive, &mut rng(1), &opts).unwrap();
        assert_eq!(rep.witness.k, 1);
        assert!(verify_blowup(&g, &c5, &rep.witness).valid);
        let k2 = Pattern::builtin("k2").unwrap();
        let g = gen_blowup(&k2, 3).unwrap();
        let rep = find_blowup(&g, &k2, Mode::Adaptive, &mut rng(2), &opts).unwrap();
        assert_eq!(rep.witness.k, 3);
        assert!(matches!(
            find_blowup(&Graph::complete(4), &c5, Mode::Adaptive, &mut rng(3), &opts),
            Err(Error::NoCopy(_))
        ));
    }

    #[test]
    fn random_graph_witnesses_verify() {
        let opts = FinderOptions::default();
        for seed in 0..6 {
            let g = gen_gnp(40, 0.5, seed).unwrap();
            for name in ["k2", "p3", "c4"] {
                let p = Pattern::builtin(name).unwrap();
                let rep = find_blowup(&g, &p, Mode::Adaptive, &mut rng(seed), &opts).unwrap();
                assert!(verify_blowup(&g, &p, &rep.witness).valid, "{name} seed {seed}");
                let cert = rep.certificate.unwrap();
                assert_eq!(
                    count_canonical_copies(&g, &p, &cert.parts).unwrap().count,
                    cert.canonical_count
                );
            }
        }
    }
}
