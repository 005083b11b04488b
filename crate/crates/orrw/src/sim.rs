//! Exact simulation of the reinforced walk and Monte Carlo tail estimation.
//!
//! A walk step samples the next vertex with probability proportional to the
//! current edge weights (`δ` on traversed edges, 1 elsewhere), so trajectories
//! are exact draws from the process — there is no discretisation layer.  On
//! top of single trajectories the module provides the derived bookkeeping
//! (empirical vertex and arc measures, renewal times, stopping times against
//! a decreasing family) and an embarrassingly parallel survival estimator
//! whose log-slope recovers the exponential decay rate of the stopping-time
//! tail.
//!
//! Reproducibility: every Monte Carlo sample owns a counter-based RNG stream
//! keyed by `(seed, sample index)`, so results are independent of thread
//! scheduling and identical across runs and machines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{DecreasingFamily, EdgeSubset, FiniteGraph, LiftedGraph};
use crate::kernel::{edge_weight, KernelError, Measure};

/// Survivor floor for the *default* fit window, used when the caller picks
/// no window of their own: with fewer than ~50 survivors the binomial error
/// on `log p̂` is no longer small compared to the signal, and the tail is
/// pure exponential anyway so little is lost by truncating.  A window chosen
/// explicitly is honoured as given (zero-survivor points excepted), since a
/// cut-off placed by the data itself biases the fitted slope.
pub const DEFAULT_MIN_SURVIVORS: u64 = 50;

/// Hard cap on steps simulated per sample; grids beyond this are refused.
pub const MAX_HORIZON: usize = 1_000_000;

/// Minimum sample count accepted by [`estimate_tail_decay`].
pub const MIN_SAMPLES: u64 = 1_000;

/// Errors from simulation and tail estimation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("start vertex {start} out of range for a graph on {n} vertices")]
    StartOutOfRange { start: usize, n: usize },
    #[error("a trajectory needs at least one step")]
    NoSteps,
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("horizon {requested} exceeds the per-sample cap {cap}")]
    HorizonExceeded { requested: usize, cap: usize },
    #[error("tail estimation needs at least {min} samples, got {got}")]
    TooFewSamples { got: u64, min: u64 },
    #[error("the step grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("no usable fit window: too few grid points kept enough survivors")]
    EmptyFit,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn check_delta(delta: f64) -> Result<(), SimError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(KernelError::NonPositiveDelta(delta).into());
    }
    Ok(())
}

fn check_start(g: &FiniteGraph, start: usize) -> Result<(), SimError> {
    if start >= g.n_vertices() {
        return Err(SimError::StartOutOfRange { start, n: g.n_vertices() });
    }
    Ok(())
}

/// Instantaneous state of the walk: position, traversed-edge set and
/// per-edge traversal counts.  The traversed set is exactly the set of
/// edges with a positive count, and those are the edges whose weight has
/// switched from 1 to `δ`.
#[derive(Clone, Debug)]
pub struct WalkState {
    position: usize,
    traversed: EdgeSubset,
    steps: usize,
    counts: Vec<u64>,
}

impl WalkState {
    /// Fresh walk at `start`: nothing traversed, all weights 1.
    pub fn new(g: &FiniteGraph, start: usize) -> Result<WalkState, SimError> {
        check_start(g, start)?;
        Ok(WalkState {
            position: start,
            traversed: EdgeSubset::EMPTY,
            steps: 0,
            counts: vec![0; g.n_edges()],
        })
    }

    /// Current vertex.
    pub fn position(&self) -> usize {
        self.position
    }

    /// Set of edges traversed so far.
    pub fn traversed(&self) -> EdgeSubset {
        self.traversed
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// How many times edge `e` has been traversed.
    pub fn traversal_count(&self, e: usize) -> u64 {
        self.counts[e]
    }

    /// Advance one step: the next vertex is drawn with probability
    /// proportional to the weight of the connecting edge (`δ` if traversed,
    /// 1 otherwise).  Returns the new position.
    pub fn step<R: Rng + ?Sized>(&mut self, g: &FiniteGraph, delta: f64, rng: &mut R) -> usize {
        debug_assert!(delta > 0.0);
        let incident = g.neighbors(self.position);
        let total: f64 = incident
            .iter()
            .map(|&(_, e)| edge_weight(e, self.traversed, delta))
            .sum();
        let mut u = rng.random::<f64>() * total;
        // The subtraction walk lands on the last edge if rounding pushes `u`
        // past the final cumulative weight.
        let mut chosen = incident[incident.len() - 1];
        for &(nb, e) in incident {
            let w = edge_weight(e, self.traversed, delta);
            if u < w {
                chosen = (nb, e);
                break;
            }
            u -= w;
        }
        let (nb, e) = chosen;
        self.counts[e] += 1;
        self.traversed = self.traversed.with(e);
        self.steps += 1;
        self.position = nb;
        nb
    }
}

/// A realised walk path together with its derived bookkeeping.
#[derive(Clone, Debug)]
pub struct Trajectory {
    positions: Vec<usize>,
    arcs: Vec<usize>,
    traversed: Vec<EdgeSubset>,
    renewal_times: Vec<usize>,
}

impl Trajectory {
    /// Build a trajectory from an explicit vertex sequence, validating that
    /// consecutive vertices are adjacent.  The walk is taken to start fresh:
    /// no edge is traversed before the first step.
    pub fn from_positions(g: &FiniteGraph, positions: &[usize]) -> Result<Trajectory, SimError> {
        if positions.len() < 2 {
            return Err(SimError::NoSteps);
        }
        for &v in positions {
            check_start(g, v)?;
        }
        let lifted = LiftedGraph::new(g);
        let mut arcs = Vec::with_capacity(positions.len() - 1);
        let mut traversed = Vec::with_capacity(positions.len());
        traversed.push(EdgeSubset::EMPTY);
        for pair in positions.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            let e = g.edge_between(u, v).ok_or(SimError::NotAdjacent(u, v))?;
            arcs.push(lifted.arc_out_of(e, u));
            traversed.push(traversed.last().unwrap().with(e));
        }
        // Renewal times mark the appearance of each distinct edge: the first
        // is pinned to 0 by convention (the first step always traverses a
        // new edge), the k-th is the step at which the k-th distinct edge
        // shows up.
        let mut renewal_times = vec![0];
        for j in 2..traversed.len() {
            if traversed[j].len() > traversed[j - 1].len() {
                renewal_times.push(j);
            }
        }
        Ok(Trajectory { positions: positions.to_vec(), arcs, traversed, renewal_times })
    }

    /// Number of steps taken.
    pub fn n_steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// Vertex sequence `X_0, …, X_n`.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Arc identifiers of the steps (arc `j` goes from `X_j` to `X_{j+1}`),
    /// in the indexing of [`LiftedGraph`].
    pub fn arcs(&self) -> &[usize] {
        &self.arcs
    }

    /// Traversed-set history: entry `j` is the set after `j` steps.
    pub fn traversed_history(&self) -> &[EdgeSubset] {
        &self.traversed
    }

    /// Traversed set at the end of the walk.
    pub fn final_traversed(&self) -> EdgeSubset {
        *self.traversed.last().unwrap()
    }

    /// Renewal times `τ_1 = 0 < τ_2 < …`; for `k ≥ 2`, `τ_k` is the step at
    /// which the `k`-th distinct edge was traversed.
    pub fn renewal_times(&self) -> &[usize] {
        &self.renewal_times
    }

    /// Empirical vertex measure of the first `n` positions,
    /// `L_n = n⁻¹ Σ_{j<n} δ_{X_j}`.
    pub fn empirical_vertex_measure(&self, n_vertices: usize) -> Measure {
        let n = self.n_steps();
        let mut w = vec![0.0; n_vertices];
        for &x in &self.positions[..n] {
            w[x] += 1.0 / n as f64;
        }
        Measure::new(w).expect("frequencies are non-negative")
    }

    /// Empirical arc measure `n⁻¹ Σ_{j<n} δ_{𝒵_j}` over the lifted arc set;
    /// its edge marginal gives per-edge traversal frequencies.
    pub fn lifted_empirical(&self, lifted: &LiftedGraph) -> Measure {
        let n = self.arcs.len();
        let mut w = vec![0.0; lifted.n_arcs()];
        for &a in &self.arcs {
            w[a] += 1.0 / n as f64;
        }
        Measure::new(w).expect("frequencies are non-negative")
    }
}

/// Simulate `steps` exact steps from `start` and return the full trajectory.
pub fn run<R: Rng + ?Sized>(
    g: &FiniteGraph,
    start: usize,
    delta: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    check_delta(delta)?;
    check_start(g, start)?;
    if steps == 0 {
        return Err(SimError::NoSteps);
    }
    if steps > MAX_HORIZON {
        return Err(SimError::HorizonExceeded { requested: steps, cap: MAX_HORIZON });
    }
    let mut state = WalkState::new(g, start)?;
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(start);
    for _ in 0..steps {
        positions.push(state.step(g, delta, rng));
    }
    Trajectory::from_positions(g, &positions)
}

/// First step index `n ≥ 1` at which the traversed set leaves `family`, or
/// `None` if it stays inside for the whole trajectory.  The initial empty
/// set is never tested: family members are non-empty subgraphs, and the walk
/// counts as inside until it has traversed something.  Against the cover
/// family (every proper subgraph) this is the edge cover time.
pub fn stopping_time(traj: &Trajectory, family: &DecreasingFamily) -> Option<usize> {
    (1..traj.traversed.len()).find(|&n| !family.contains(traj.traversed[n]))
}

/// One point of an empirical survival curve: out of `samples` walks,
/// `survivors` had not yet stopped after `n` steps.
#[derive(Clone, Copy, Debug)]
pub struct SurvivalPoint {
    /// Step count the survival is evaluated at.
    pub n: usize,
    /// Number of samples still running after `n` steps.
    pub survivors: u64,
    /// Total number of samples.
    pub samples: u64,
    /// Survival fraction `survivors / samples`.
    pub p_hat: f64,
    /// Binomial standard error of `p_hat`.
    pub stderr: f64,
}

/// Monte Carlo survival curve over a step grid; survival fractions are
/// non-increasing in `n` by construction (each sample contributes a single
/// stopping time).
#[derive(Clone, Debug)]
pub struct EmpiricalSurvival {
    /// Curve points, one per grid entry, in grid order.
    pub points: Vec<SurvivalPoint>,
}

fn check_grid(n_grid: &[usize]) -> Result<(), SimError> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::BadGrid);
    }
    let horizon = *n_grid.last().unwrap();
    if horizon > MAX_HORIZON {
        return Err(SimError::HorizonExceeded { requested: horizon, cap: MAX_HORIZON });
    }
    Ok(())
}

/// Stopping time of one fresh sample, truncated at `horizon` (`None` means
/// the walk was still inside the family at the horizon).
fn sample_stop<R: Rng + ?Sized>(
    g: &FiniteGraph,
    start: usize,
    delta: f64,
    family: &DecreasingFamily,
    horizon: usize,
    rng: &mut R,
) -> Option<usize> {
    let mut state = WalkState::new(g, start).expect("start validated by caller");
    for n in 1..=horizon {
        state.step(g, delta, rng);
        if !family.contains(state.traversed()) {
            return Some(n);
        }
    }
    None
}

/// Estimate the survival curve `P(𝒯 > n)` on `n_grid` from `samples`
/// independent walks.  Sample `i` uses the RNG stream `(seed, i)`, so the
/// result does not depend on how samples are scheduled across threads.
pub fn empirical_survival(
    g: &FiniteGraph,
    start: usize,
    delta: f64,
    family: &DecreasingFamily,
    n_grid: &[usize],
    samples: u64,
    seed: u64,
) -> Result<EmpiricalSurvival, SimError> {
    check_delta(delta)?;
    check_start(g, start)?;
    check_grid(n_grid)?;
    if samples == 0 {
        return Err(SimError::TooFewSamples { got: 0, min: 1 });
    }
    let horizon = *n_grid.last().unwrap();
    let stops: Vec<Option<usize>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(i);
            sample_stop(g, start, delta, family, horizon, &mut rng)
        })
        .collect();
    let points = n_grid
        .iter()
        .map(|&n| {
            let survivors =
                stops.iter().filter(|s| s.is_none_or(|stop| stop > n)).count() as u64;
            let p_hat = survivors as f64 / samples as f64;
            let stderr = (p_hat * (1.0 - p_hat) / samples as f64).sqrt();
            SurvivalPoint { n, survivors, samples, p_hat, stderr }
        })
        .collect();
    Ok(EmpiricalSurvival { points })
}

/// Exponential decay estimate for a stopping-time tail: least-squares fit of
/// `log P̂(𝒯 > n)` against `n`.
#[derive(Clone, Copy, Debug)]
pub struct DecayEstimate {
    /// Fitted per-step log-rate (non-positive).
    pub slope: f64,
    /// Fitted intercept of the log-survival line.
    pub intercept: f64,
    /// Standard error of the slope, from the binomial errors of the points.
    pub std_error: f64,
    /// First and last step count actually used in the fit.
    pub window: (usize, usize),
    /// Number of Monte Carlo samples behind the curve.
    pub samples: u64,
}

/// Unweighted least-squares fit of `log p̂` over the grid points that kept at
/// least `min_survivors` survivors (points with zero survivors have no
/// log-survival and are always dropped; a caller-chosen floor above 1 trims
/// points drowned in binomial noise instead of down-weighting them).
///
/// The slope's standard error propagates the points' binomial errors through
/// their joint covariance: all points count survivors of the *same* walks,
/// and the survivors at a later step are a subset of those at an earlier one,
/// so `Cov(log p̂_m, log p̂_n) = Var(log p̂_{min(m,n)})` under the delta
/// method.  Treating the points as independent would understate the error by
/// roughly half on these curves.
pub fn fit_log_survival(
    curve: &EmpiricalSurvival,
    min_survivors: u64,
) -> Result<DecayEstimate, SimError> {
    let kept: Vec<&SurvivalPoint> = curve
        .points
        .iter()
        .filter(|p| p.survivors >= min_survivors.max(1))
        .collect();
    if kept.len() < 2 {
        return Err(SimError::EmptyFit);
    }
    let m = kept.len() as f64;
    let xbar = kept.iter().map(|p| p.n as f64).sum::<f64>() / m;
    let ybar = kept.iter().map(|p| p.p_hat.ln()).sum::<f64>() / m;
    let sxx: f64 = kept.iter().map(|p| (p.n as f64 - xbar).powi(2)).sum();
    let sxy: f64 = kept
        .iter()
        .map(|p| (p.n as f64 - xbar) * (p.p_hat.ln() - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    // Delta method per point: Var(log p̂) = (1 − p̂) / (p̂ · N); the pair
    // (m, n) contributes through the variance of the earlier point.
    let weight = |p: &SurvivalPoint| (p.n as f64 - xbar) / sxx;
    let var_log = |p: &SurvivalPoint| (1.0 - p.p_hat) / (p.p_hat * p.samples as f64);
    let mut var_slope = 0.0;
    for (i, a) in kept.iter().enumerate() {
        // Diagonal term, then twice the upper triangle (earlier point = a).
        var_slope += weight(a) * weight(a) * var_log(a);
        let later: f64 = kept[i + 1..].iter().map(|b| weight(b)).sum();
        var_slope += 2.0 * weight(a) * later * var_log(a);
    }
    debug_assert!(slope <= 1e-12, "survival is monotone, slope must be ≤ 0");
    Ok(DecayEstimate {
        slope,
        intercept,
        std_error: var_slope.max(0.0).sqrt(),
        window: (kept[0].n, kept[kept.len() - 1].n),
        samples: kept[0].samples,
    })
}

/// Monte Carlo estimate of the exponential tail rate of the stopping time of
/// `family`: simulates `samples` walks (streams keyed by `(seed, sample)`),
/// forms the empirical survival curve on `n_grid` and fits its log-slope
/// over the whole grid.  Points where every sample had already stopped are
/// dropped (their log-survival is undefined); trimming noisy-but-nonzero
/// tail points is left to callers via [`fit_log_survival`], because a
/// survivor-count cut-off placed by the data itself skews the fitted slope.
pub fn estimate_tail_decay(
    g: &FiniteGraph,
    start: usize,
    delta: f64,
    family: &DecreasingFamily,
    n_grid: &[usize],
    samples: u64,
    seed: u64,
) -> Result<DecayEstimate, SimError> {
    if samples < MIN_SAMPLES {
        return Err(SimError::TooFewSamples { got: samples, min: MIN_SAMPLES });
    }
    let curve = empirical_survival(g, start, delta, family, n_grid, samples, seed)?;
    fit_log_survival(&curve, 1)
}
