//! Exact distribution of cover-type stopping times and spectral exit rates.
//!
//! The walk stops at the first step `n` at which its set of traversed edges
//! leaves a decreasing family.  Because the traversed set together with the
//! current oriented edge is a Markov chain, the tail `P(𝒯 > n)` can be
//! computed exactly by forward iteration of an absorbing *meta-chain* on
//! `(arc, traversed set)` pairs.  This module provides:
//!
//! * a brute-force trajectory enumerator in exact rational arithmetic — the
//!   independent oracle everything else is compared against,
//! * the meta-chain and its survival curve in `f64` (log-domain, so curves
//!   stay meaningful far beyond the underflow horizon) and in exact
//!   rationals for small cases,
//! * Perron–Frobenius exit rates `−log ρ` of sub-stochastic restrictions of
//!   the walk's kernel to a traversed subgraph, in both vertex and arc
//!   space,
//! * the exact decay exponent of the survival curve (a minimum of exit
//!   rates over the family), and
//! * a ratio-test diagnostic for `E[e^{α𝒯}] < ∞`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{DecreasingFamily, EdgeSubset, FiniteGraph, LiftedGraph, MAX_EDGES_EXACT};
use crate::kernel::{base_kernel, Kernel};

/// Convergence tolerance on the Rayleigh quotient in power iteration.
pub const POWER_TOL: f64 = 1e-12;

/// Iteration cap for power iteration.
pub const POWER_MAX_ITERS: usize = 100_000;

/// Longest survival curve the exact engine will produce.
pub const MAX_CURVE_LEN: usize = 100_000;

/// Fewest curve points accepted by the exponential-moment ratio test.
pub const MIN_RATIO_POINTS: usize = 20;

/// Relative slack when deciding whether a geometric ratio estimate has
/// reached 1 (terms stop decaying ⇒ the series diverges).
const RATIO_FOLD: f64 = 1e-6;

/// Errors from the exact engine.
#[derive(Debug, Error)]
pub enum ExactError {
    #[error("graph has {0} edges; exact meta-chain is capped at {MAX_EDGES_EXACT}")]
    TooManyEdges(usize),
    #[error("curve length {0} exceeds the cap {MAX_CURVE_LEN}")]
    CurveTooLong(usize),
    #[error("power iteration did not converge within {POWER_MAX_ITERS} iterations")]
    PowerIterationStalled,
    #[error("subset {0} is not a connected start-touching subgraph")]
    SubsetNotInFamily(EdgeSubset),
    #[error("survival curve has {0} points; ratio test needs at least {MIN_RATIO_POINTS}")]
    CurveTooShort(usize),
    #[error("exact-rational mode is limited to 3 edges and horizon 20, got {edges} edges, horizon {horizon}")]
    RationalModeOutOfRange { edges: usize, horizon: usize },
}

// ---------------------------------------------------------------------------
// Brute-force oracle: exact rational trajectory enumeration.
// ---------------------------------------------------------------------------

/// Probability that the stopping time exceeds each `n = 0..=n_max`, by
/// explicit enumeration of every length-`n_max` trajectory with exact
/// rational arithmetic.  Exponential in `n_max` — this is the reference
/// oracle for tiny cases, deliberately sharing no code with the meta-chain.
///
/// Because the traversed set only grows and the family is downward closed,
/// `P(𝒯 > n)` equals the probability that the traversed set after `n` steps
/// is still a member of the family.
pub fn brute_force_survival(
    g: &FiniteGraph,
    delta: &BigRational,
    family: &DecreasingFamily,
    n_max: usize,
) -> Vec<BigRational> {
    let mut curve = vec![BigRational::zero(); n_max + 1];
    curve[0] = BigRational::one();
    let mut alive = curve.clone();
    walk_all(
        g,
        delta,
        family,
        g.start(),
        EdgeSubset::EMPTY,
        BigRational::one(),
        1,
        n_max,
        &mut alive,
    );
    curve[1..].clone_from_slice(&alive[1..]);
    curve
}

#[allow(clippy::too_many_arguments)]
fn walk_all(
    g: &FiniteGraph,
    delta: &BigRational,
    family: &DecreasingFamily,
    at: usize,
    traversed: EdgeSubset,
    prob: BigRational,
    step: usize,
    n_max: usize,
    alive: &mut [BigRational],
) {
    if step > n_max {
        return;
    }
    // Reinforced weights of the edges at `at`, written out independently of
    // the kernel module on purpose.
    let one = BigRational::one();
    let total: BigRational = g
        .neighbors(at)
        .iter()
        .map(|&(_, e)| if traversed.contains(e) { delta.clone() } else { one.clone() })
        .sum();
    for &(y, e) in g.neighbors(at) {
        let w = if traversed.contains(e) { delta.clone() } else { one.clone() };
        let p = &prob * w / &total;
        let next = traversed.with(e);
        if family.contains(next) {
            alive[step] += &p;
            walk_all(g, delta, family, y, next, p, step + 1, n_max, alive);
        }
    }
}

/// Convenience: an exact rational reinforcement parameter from a fraction.
pub fn rational_delta(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

// ---------------------------------------------------------------------------
// Meta-chain on (arc, traversed set).
// ---------------------------------------------------------------------------

/// Absorbing Markov chain on pairs `(current oriented edge, traversed set)`.
///
/// Live states have their traversed set inside the family; any step whose
/// new traversed set falls outside is absorbed into an implicit "stopped"
/// sink, so the survival curve is the total mass still on live states.
/// Only states reachable from the start vertex are materialised.
#[derive(Clone, Debug)]
pub struct MetaChain {
    /// Live states `(arc, traversed set)`, in construction (BFS) order.
    states: Vec<(usize, EdgeSubset)>,
    /// Sparse live-to-live transitions: row `i` lists `(state, prob)`.
    /// Probability mass missing from a row is absorbed.
    trans: Vec<Vec<(usize, f64)>>,
    /// Initial distribution at walk-time 1: the first step is uniform over
    /// the arcs leaving the start vertex (all weights are 1 before any edge
    /// is traversed), each landing in its own singleton traversed set.
    /// Mass on singletons outside the family stops at step 1 and is omitted.
    init: Vec<(usize, f64)>,
    /// True when the family contains the full edge set, so no trajectory is
    /// ever stopped.
    unstoppable: bool,
}

impl MetaChain {
    /// Live states in construction order.
    pub fn states(&self) -> &[(usize, EdgeSubset)] {
        &self.states
    }

    /// Distinct traversed sets among live states, ascending.
    pub fn live_sets(&self) -> Vec<EdgeSubset> {
        let mut sets: Vec<EdgeSubset> = self.states.iter().map(|&(_, f)| f).collect();
        sets.sort_unstable();
        sets.dedup();
        sets
    }

    /// Does some live state lose probability mass to the stopped sink?
    pub fn sink_reachable(&self) -> bool {
        self.trans
            .iter()
            .any(|row| row.iter().map(|&(_, p)| p).sum::<f64>() < 1.0 - 1e-9)
    }

    pub fn is_unstoppable(&self) -> bool {
        self.unstoppable
    }
}

/// Build the reachable meta-chain for the walk on `g` with parameter `delta`
/// stopped at the exit time of `family`.
pub fn build_meta_chain(
    g: &FiniteGraph,
    delta: f64,
    family: &DecreasingFamily,
) -> Result<MetaChain, ExactError> {
    if g.n_edges() > MAX_EDGES_EXACT {
        return Err(ExactError::TooManyEdges(g.n_edges()));
    }
    let lifted = LiftedGraph::new(g);
    let mut kernels: HashMap<u32, Kernel> = HashMap::new();
    let mut kernel_for = |set: EdgeSubset| -> Kernel {
        kernels
            .entry(set.0)
            .or_insert_with(|| {
                base_kernel(g, set, delta).expect("delta validated by caller")
            })
            .clone()
    };

    let mut index: HashMap<(usize, u32), usize> = HashMap::new();
    let mut states: Vec<(usize, EdgeSubset)> = Vec::new();
    let mut queue: Vec<usize> = Vec::new();
    let mut init: Vec<(usize, f64)> = Vec::new();

    let first_step = 1.0 / g.degree(g.start()) as f64;
    for &(_, e) in g.neighbors(g.start()) {
        let set = EdgeSubset::singleton(e);
        if !family.contains(set) {
            continue; // stopped at step 1
        }
        let arc = lifted.arc_out_of(e, g.start());
        let id = *index.entry((arc, set.0)).or_insert_with(|| {
            states.push((arc, set));
            queue.push(states.len() - 1);
            states.len() - 1
        });
        init.push((id, first_step));
    }

    let mut trans: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut done = 0;
    while done < queue.len() {
        let s = queue[done];
        done += 1;
        let (arc, set) = states[s];
        let x = lifted.head(arc);
        let k = kernel_for(set);
        let mut row = Vec::new();
        for &(y, e) in g.neighbors(x) {
            let p = k.get(x, y);
            let next = set.with(e);
            if !family.contains(next) {
                continue; // absorbed
            }
            let arc2 = lifted.arc_out_of(e, x);
            let id = *index.entry((arc2, next.0)).or_insert_with(|| {
                states.push((arc2, next));
                queue.push(states.len() - 1);
                states.len() - 1
            });
            row.push((id, p));
        }
        trans.push(row);
        debug_assert_eq!(trans.len(), done);
    }

    Ok(MetaChain {
        states,
        trans,
        init,
        unstoppable: family.contains_full(g),
    })
}

// ---------------------------------------------------------------------------
// Survival curves.
// ---------------------------------------------------------------------------

/// Exact tail probabilities `P(𝒯 > n)`, `n = 0..=n_max`, kept in the log
/// domain so that curves remain exact in slope far below `f64` underflow.
#[derive(Clone, Debug)]
pub struct SurvivalCurve {
    /// `log P(𝒯 > n)` at index `n`; `log_p[0] = 0`.
    log_p: Vec<f64>,
}

impl SurvivalCurve {
    /// Number of points (horizon + 1).
    pub fn len(&self) -> usize {
        self.log_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_p.is_empty()
    }

    /// `P(𝒯 > n)`.
    pub fn p(&self, n: usize) -> f64 {
        self.log_p[n].exp()
    }

    /// `log P(𝒯 > n)`.
    pub fn log_p(&self, n: usize) -> f64 {
        self.log_p[n]
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_p
    }

    /// Assemble a curve from log-probabilities (for tests and adapters).
    pub fn from_log(log_p: Vec<f64>) -> SurvivalCurve {
        SurvivalCurve { log_p }
    }

    /// The Cesàro decay estimate `−log P(𝒯 > n) / n` at the last index.
    pub fn cesaro_rate(&self) -> f64 {
        let n = self.len() - 1;
        -self.log_p[n] / n as f64
    }

    /// Least-squares slope of `log P(𝒯 > n)` over `n ∈ [lo, hi]`, negated —
    /// the tail decay rate with the bounded oscillatory prefactor projected
    /// out (a plain quotient at one `n` keeps an `O(1/n)` bias from that
    /// prefactor).
    pub fn tail_slope(&self, lo: usize, hi: usize) -> f64 {
        assert!(lo < hi && hi < self.len(), "slope window out of range");
        let xs: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
        let ys = &self.log_p[lo..=hi];
        -least_squares_slope(&xs, ys)
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Forward-iterate the meta-chain to the exact survival curve
/// `P(𝒯 > n), n = 0..=n_max`.  The live vector is renormalised every step
/// and the log of the survival accumulates separately, so long horizons do
/// not underflow.
pub fn survival_curve(chain: &MetaChain, n_max: usize) -> Result<SurvivalCurve, ExactError> {
    if n_max > MAX_CURVE_LEN {
        return Err(ExactError::CurveTooLong(n_max));
    }
    let mut log_p = Vec::with_capacity(n_max + 1);
    log_p.push(0.0);
    if n_max == 0 {
        return Ok(SurvivalCurve { log_p });
    }
    let mut v = vec![0.0; chain.states.len()];
    for &(s, p) in &chain.init {
        v[s] += p;
    }
    let mut log_alive = 0.0;
    for _ in 1..=n_max {
        let mass: f64 = v.iter().sum();
        if mass <= 0.0 {
            // Unreachable for valid decreasing families (re-traversing the
            // current edge always survives), but degrade gracefully.
            log_p.push(f64::NEG_INFINITY);
            continue;
        }
        // `mass` is a conditional survival probability, ≤ 1 exactly; float
        // dot products can land an ulp above, which would make the curve
        // tick upward, so project back onto the true range.
        debug_assert!(mass <= 1.0 + 1e-9, "conditional survival {mass} far above 1");
        log_alive += mass.ln().min(0.0);
        log_p.push(log_alive);
        for x in &mut v {
            *x /= mass;
        }
        let mut next = vec![0.0; v.len()];
        for (s, &m) in v.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(t, p) in &chain.trans[s] {
                next[t] += m * p;
            }
        }
        v = next;
    }
    Ok(SurvivalCurve { log_p })
}

/// Exact-rational survival curve by forward iteration on (vertex, traversed
/// set) mass — a second independent implementation used to cross-check both
/// the brute-force enumerator and the floating-point meta-chain.  Limited to
/// tiny instances.
pub fn survival_curve_rational(
    g: &FiniteGraph,
    delta: &BigRational,
    family: &DecreasingFamily,
    n_max: usize,
) -> Result<Vec<BigRational>, ExactError> {
    if g.n_edges() > 3 || n_max > 20 {
        return Err(ExactError::RationalModeOutOfRange { edges: g.n_edges(), horizon: n_max });
    }
    let mut curve = Vec::with_capacity(n_max + 1);
    curve.push(BigRational::one());
    let mut mass: HashMap<(usize, u32), BigRational> = HashMap::new();
    mass.insert((g.start(), 0), BigRational::one());
    let one = BigRational::one();
    for _ in 1..=n_max {
        let mut next: HashMap<(usize, u32), BigRational> = HashMap::new();
        for ((x, set), m) in &mass {
            let set = EdgeSubset(*set);
            let total: BigRational = g
                .neighbors(*x)
                .iter()
                .map(|&(_, e)| if set.contains(e) { delta.clone() } else { one.clone() })
                .sum();
            for &(y, e) in g.neighbors(*x) {
                let w = if set.contains(e) { delta.clone() } else { one.clone() };
                let grown = set.with(e);
                if !family.contains(grown) {
                    continue;
                }
                *next.entry((y, grown.0)).or_insert_with(BigRational::zero) +=
                    m * w / &total;
            }
        }
        curve.push(next.values().sum());
        mass = next;
    }
    Ok(curve)
}

// ---------------------------------------------------------------------------
// Spectral exit rates (Perron oracle).
// ---------------------------------------------------------------------------

/// Spectral radius of a non-negative square matrix by power iteration on
/// `M + I` (the shift keeps periodic supports convergent), restricted to the
/// rows/columns reachable from `seeds` in the support digraph.
fn spectral_radius(mat: &[Vec<f64>], seeds: &[usize]) -> Result<f64, ExactError> {
    let n = mat.len();
    if n == 0 {
        return Ok(0.0);
    }
    // Reachability restriction.
    let mut reach = vec![false; n];
    let mut stack: Vec<usize> = seeds.to_vec();
    for &s in seeds {
        reach[s] = true;
    }
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if mat[i][j] > 0.0 && !reach[j] {
                reach[j] = true;
                stack.push(j);
            }
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| reach[i]).collect();
    if idx.is_empty() {
        return Ok(0.0);
    }
    let m = idx.len();
    let sub: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| mat[i][j]).collect())
        .collect();
    let mut v = vec![1.0 / m as f64; m];
    let mut rayleigh_prev = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        // w = (M + I) v
        let mut w = v.clone();
        for i in 0..m {
            for j in 0..m {
                w[i] += sub[i][j] * v[j];
            }
        }
        let dot_wv: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let dot_vv: f64 = v.iter().map(|a| a * a).sum();
        let rayleigh = dot_wv / dot_vv;
        let norm: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / norm;
        }
        if (rayleigh - rayleigh_prev).abs() <= POWER_TOL {
            return Ok((rayleigh - 1.0).max(0.0));
        }
        rayleigh_prev = rayleigh;
    }
    Err(ExactError::PowerIterationStalled)
}

/// Exit rate `−log ρ` of the walk confined to the traversed subgraph
/// `confined`, in vertex space: the sub-stochastic matrix keeps only moves
/// along edges of `confined`, with transition probabilities of the walk
/// whose traversed set is exactly `confined`.
pub fn perron_decay_vertex(
    g: &FiniteGraph,
    delta: f64,
    confined: EdgeSubset,
) -> Result<f64, ExactError> {
    if !g.in_subgraph_family(confined) {
        return Err(ExactError::SubsetNotInFamily(confined));
    }
    let k = base_kernel(g, confined, delta).expect("delta checked by caller");
    let n = g.n_vertices();
    let mut mat = vec![vec![0.0; n]; n];
    for (x, row) in mat.iter_mut().enumerate() {
        for &(y, e) in g.neighbors(x) {
            if confined.contains(e) {
                row[y] = k.get(x, y);
            }
        }
    }
    let rho = spectral_radius(&mat, &[g.start()])?;
    Ok(decay_from_radius(rho))
}

/// Exit rate `−log ρ` in arc space: states are the oriented edges of
/// `confined`, transitions use the lifted kernel restricted to arcs over
/// `confined`.  Must agree with [`perron_decay_vertex`] to high accuracy;
/// the pair exists so tests can assert that agreement.
pub fn perron_decay_arc(
    g: &FiniteGraph,
    delta: f64,
    confined: EdgeSubset,
) -> Result<f64, ExactError> {
    if !g.in_subgraph_family(confined) {
        return Err(ExactError::SubsetNotInFamily(confined));
    }
    let lifted = LiftedGraph::new(g);
    let k = base_kernel(g, confined, delta).expect("delta checked by caller");
    let m = lifted.n_arcs();
    let mut mat = vec![vec![0.0; m]; m];
    for (z1, row) in mat.iter_mut().enumerate() {
        if !confined.contains(lifted.edge_of(z1)) {
            continue;
        }
        for &z2 in lifted.out_arcs(z1) {
            if confined.contains(lifted.edge_of(z2)) {
                row[z2] = k.get(lifted.tail(z2), lifted.head(z2));
            }
        }
    }
    let seeds: Vec<usize> = lifted
        .arcs_from(g.start())
        .iter()
        .copied()
        .filter(|&z| confined.contains(lifted.edge_of(z)))
        .collect();
    let rho = spectral_radius(&mat, &seeds)?;
    Ok(decay_from_radius(rho))
}

fn decay_from_radius(rho: f64) -> f64 {
    let d = -rho.ln();
    if d.abs() < 1e-12 {
        0.0
    } else {
        d
    }
}

/// Result of the exact decay-exponent oracle.
#[derive(Clone, Debug)]
pub struct AlphaOracle {
    /// The exponent: `P(𝒯 > n)` decays like `e^{−αn}` up to bounded factors.
    pub alpha: f64,
    /// The family member attaining the minimal exit rate.
    pub argmin: EdgeSubset,
    /// True when the family contains the full edge set — the stopping time
    /// is then almost surely infinite and `alpha` is 0 by convention.
    pub unstoppable: bool,
}

/// Exact decay exponent of `P(𝒯 > n)`: the minimum over family members of
/// the confined-walk exit rate.  The slowest-exiting member dominates the
/// tail, which is cross-checked against the survival-curve slope in tests
/// rather than assumed.
pub fn exact_alpha_oracle(
    g: &FiniteGraph,
    delta: f64,
    family: &DecreasingFamily,
) -> Result<AlphaOracle, ExactError> {
    if family.contains_full(g) {
        return Ok(AlphaOracle {
            alpha: 0.0,
            argmin: g.full_edge_set(),
            unstoppable: true,
        });
    }
    let rates: Vec<(EdgeSubset, f64)> = family
        .members()
        .par_iter()
        .map(|&sub| perron_decay_vertex(g, delta, sub).map(|r| (sub, r)))
        .collect::<Result<_, _>>()?;
    let &(argmin, alpha) = rates
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite rates"))
        .expect("family is non-empty");
    Ok(AlphaOracle { alpha, argmin, unstoppable: false })
}

// ---------------------------------------------------------------------------
// Exponential-moment diagnostic.
// ---------------------------------------------------------------------------

/// Verdict of the ratio test for `Σ_n e^{αn} P(𝒯 > n)` (finiteness of this
/// series is equivalent to `E[e^{α𝒯}] < ∞`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpMomentVerdict {
    Converges,
    Diverges,
}

/// Ratio-test report for the exponential moment at rate `α`.
#[derive(Clone, Debug)]
pub struct ExpMomentReport {
    pub verdict: ExpMomentVerdict,
    /// Geometric-ratio estimate of the terms `e^{αn} P(𝒯 > n)` over the
    /// second half of the curve.
    pub ratio: f64,
    /// Partial sums `Σ_{k ≤ n} e^{αk} P(𝒯 > k)` (may reach `inf` when the
    /// series diverges fast; the verdict never relies on them).
    pub partial_sums: Vec<f64>,
}

/// Ratio test on the terms `t_n = e^{αn} P(𝒯 > n)`: estimate their
/// geometric ratio by a least-squares slope of `log t_n` over the second
/// half of the curve (robust to the bounded periodic prefactor of exact
/// curves) and compare with 1.  At the critical rate the terms are bounded
/// away from 0, so ratios within [`RATIO_FOLD`] of 1 count as divergent.
pub fn exp_moment_diagnostic(
    curve: &SurvivalCurve,
    alpha: f64,
) -> Result<ExpMomentReport, ExactError> {
    assert!(alpha >= 0.0, "exponential-moment rate must be non-negative");
    if curve.len() < MIN_RATIO_POINTS {
        return Err(ExactError::CurveTooShort(curve.len()));
    }
    let log_terms: Vec<f64> = (0..curve.len())
        .map(|n| alpha * n as f64 + curve.log_p(n))
        .collect();
    let lo = curve.len() / 2;
    let xs: Vec<f64> = (lo..curve.len()).map(|n| n as f64).collect();
    let ratio = least_squares_slope(&xs, &log_terms[lo..]).exp();
    let verdict = if ratio >= 1.0 - RATIO_FOLD {
        ExpMomentVerdict::Diverges
    } else {
        ExpMomentVerdict::Converges
    };
    let mut partial_sums = Vec::with_capacity(curve.len());
    let mut acc = 0.0f64;
    for &lt in &log_terms {
        acc += lt.exp();
        partial_sums.push(acc);
    }
    Ok(ExpMomentReport { verdict, ratio, partial_sums })
}
