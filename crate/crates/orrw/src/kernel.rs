//! Transition kernels of the once-reinforced walk, probability measures on
//! vertices and arcs, relative entropy, and the per-step entropy cost.
//!
//! The reinforced weight rule: given a set `E'` of already-traversed edges
//! and reinforcement parameter `δ > 0`, an edge weighs `δ` if it lies in
//! `E'` and `1` otherwise.  From vertex `x` the walk moves to a neighbour
//! `y` with probability proportional to the weight of the edge `xy`:
//!
//! ```text
//! p̂_{E'}(x, y) = w(xy) / Σ_{z ∼ x} w(xz),   w(xy) = δ·1{xy ∈ E'} + 1{xy ∉ E'}.
//! ```
//!
//! On the full edge set the weights cancel and `p̂_E` is the simple random
//! walk kernel `1/deg(x)` — independent of `δ`.  The lifted kernel moves the
//! same rule onto oriented edges: `p_{E'}(z₁, z₂) = p̂_{E'}(tail z₂, head z₂)`
//! whenever the head of `z₁` is the tail of `z₂`, and `0` otherwise.
//!
//! All entropies are in nats, with the convention `0·log 0 = 0`.  Infinite
//! values (failed absolute continuity, infeasible measures) are carried by
//! the tagged extended real [`Ext`] rather than floating-point infinities,
//! and the "is this entry structurally zero?" question is answered by exact
//! support masks so that `+∞` results are deterministic.

use std::fmt;
use std::ops::Add;

use thiserror::Error;

use crate::graph::{EdgeSubset, FiniteGraph, LiftedGraph};

/// Probability mass below which a measure entry counts as structurally zero.
pub const SUPPORT_EPS: f64 = 1e-15;

/// Tolerance for "sums to one" checks on probability measures and kernel
/// rows.
pub const PROB_TOL: f64 = 1e-12;

/// Errors from measure and kernel construction.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("measure entry {index} is negative ({value})")]
    NegativeMass { index: usize, value: f64 },
    #[error("probability measure sums to {sum}, not 1")]
    NotProbability { sum: f64 },
    #[error("kernel row {row} sums to {sum}, not 1")]
    BadRowSum { row: usize, sum: f64 },
    #[error("kernel entry ({row},{col}) is negative ({value})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("reinforcement parameter must be positive, got {0}")]
    NonPositiveDelta(f64),
}

/// Extended real in `[0, +∞]` represented as a tag, so infinities propagate
/// exactly instead of through floating-point overflow.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Ext {
    Finite(f64),
    PosInf,
}

impl Ext {
    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Finite(v) => Some(v),
            Ext::PosInf => None,
        }
    }

    /// Unwrap a value known to be finite.
    ///
    /// # Panics
    /// If the value is `+∞`.
    pub fn unwrap_finite(self) -> f64 {
        self.finite().expect("expected a finite value, got +inf")
    }

    /// As an `f64`, mapping `+∞` to `f64::INFINITY` (for display and CSV
    /// output only — arithmetic should stay in `Ext`).
    pub fn to_f64(self) -> f64 {
        match self {
            Ext::Finite(v) => v,
            Ext::PosInf => f64::INFINITY,
        }
    }

    /// Minimum of two extended reals.
    pub fn min(self, other: Ext) -> Ext {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a.min(b)),
            (Ext::Finite(a), Ext::PosInf) => Ext::Finite(a),
            (Ext::PosInf, b) => b,
        }
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
            _ => Ext::PosInf,
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Ext) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => a.partial_cmp(b),
            (Ext::Finite(_), Ext::PosInf) => Some(std::cmp::Ordering::Less),
            (Ext::PosInf, Ext::Finite(_)) => Some(std::cmp::Ordering::Greater),
            (Ext::PosInf, Ext::PosInf) => Some(std::cmp::Ordering::Equal),
        }
    }
}

impl From<f64> for Ext {
    fn from(v: f64) -> Ext {
        if v.is_finite() {
            Ext::Finite(v)
        } else {
            Ext::PosInf
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(v) => write!(f, "{v}"),
            Ext::PosInf => write!(f, "inf"),
        }
    }
}

/// A non-negative measure on a finite index set — vertices or arcs,
/// depending on context.  Entries with absolute value below [`SUPPORT_EPS`]
/// are treated as exactly zero for all support queries.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure(Vec<f64>);

impl Measure {
    /// A general non-negative measure.
    pub fn new(weights: Vec<f64>) -> Result<Measure, KernelError> {
        for (index, &value) in weights.iter().enumerate() {
            if value < -SUPPORT_EPS || value.is_nan() {
                return Err(KernelError::NegativeMass { index, value });
            }
        }
        Ok(Measure(weights.into_iter().map(|w| w.max(0.0)).collect()))
    }

    /// A probability measure: additionally checks total mass 1 within
    /// [`PROB_TOL`].
    pub fn probability(weights: Vec<f64>) -> Result<Measure, KernelError> {
        let m = Measure::new(weights)?;
        let sum = m.mass();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(KernelError::NotProbability { sum });
        }
        Ok(m)
    }

    /// Uniform probability measure on `n` points.
    pub fn uniform(n: usize) -> Measure {
        Measure(vec![1.0 / n as f64; n])
    }

    /// Point mass at `at` on `n` points.
    pub fn dirac(n: usize, at: usize) -> Measure {
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Measure(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn mass(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Indices carrying mass above the structural-zero threshold.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] > SUPPORT_EPS).collect()
    }

    /// Is index `i` in the support?
    pub fn carries(&self, i: usize) -> bool {
        self.0[i] > SUPPORT_EPS
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Rescale to total mass 1 (requires positive mass).
    pub fn normalized(&self) -> Measure {
        let s = self.mass();
        assert!(s > 0.0, "cannot normalise a zero measure");
        Measure(self.0.iter().map(|w| w / s).collect())
    }
}

/// For a measure on arcs (index `2e + dir`): the induced measure on edges,
/// `μ|₁(e) = μ(2e) + μ(2e+1)`.
pub fn arc_edge_marginal(mu: &Measure) -> Measure {
    debug_assert_eq!(mu.len() % 2, 0, "arc measures have even length");
    let b = mu.len() / 2;
    Measure((0..b).map(|e| mu.get(2 * e) + mu.get(2 * e + 1)).collect())
}

/// For a measure on arcs: the induced measure on vertices through arc tails,
/// `ν(x) = Σ_{z: tail(z) = x} μ(z)`.
pub fn arc_tail_marginal(lifted: &LiftedGraph, mu: &Measure, n_vertices: usize) -> Measure {
    let mut w = vec![0.0; n_vertices];
    for z in 0..mu.len() {
        w[lifted.tail(z)] += mu.get(z);
    }
    Measure(w)
}

/// A row-stochastic transition matrix over a finite state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    /// Dense rows; `rows[x][y]` is the transition probability `x → y`.
    rows: Vec<Vec<f64>>,
}

impl Kernel {
    /// Validate non-negativity and row sums within [`PROB_TOL`].
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Kernel, KernelError> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(KernelError::DimensionMismatch { left: n, right: r.len() });
            }
            for (col, &value) in r.iter().enumerate() {
                if value < -SUPPORT_EPS || value.is_nan() {
                    return Err(KernelError::NegativeEntry { row, col, value });
                }
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(KernelError::BadRowSum { row, sum });
            }
        }
        Ok(Kernel { rows })
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Is `(x, y)` a structurally possible transition?
    pub fn supports(&self, x: usize, y: usize) -> bool {
        self.rows[x][y] > SUPPORT_EPS
    }

    /// One step of the measure under the kernel: `(νP)(y) = Σ_x ν(x) P(x,y)`.
    pub fn push(&self, nu: &Measure) -> Measure {
        assert_eq!(nu.len(), self.n(), "measure/kernel dimension mismatch");
        let mut out = vec![0.0; self.n()];
        for x in 0..self.n() {
            let m = nu.get(x);
            if m == 0.0 {
                continue;
            }
            for (y, o) in out.iter_mut().enumerate() {
                *o += m * self.rows[x][y];
            }
        }
        Measure(out)
    }
}

/// The reinforced edge weight: `δ` on traversed edges, `1` on fresh ones.
pub fn edge_weight(edge: usize, traversed: EdgeSubset, delta: f64) -> f64 {
    if traversed.contains(edge) {
        delta
    } else {
        1.0
    }
}

/// Vertex-level kernel `p̂_{E'}` of the walk that has traversed exactly the
/// edges of `traversed`: from `x`, move to neighbour `y` with probability
/// proportional to the reinforced weight of edge `xy`.
///
/// With `traversed` equal to the full edge set this is the simple random
/// walk kernel `1/deg(x)` for every `δ`.
pub fn base_kernel(g: &FiniteGraph, traversed: EdgeSubset, delta: f64) -> Result<Kernel, KernelError> {
    if !(delta > 0.0) {
        return Err(KernelError::NonPositiveDelta(delta));
    }
    let n = g.n_vertices();
    let mut rows = vec![vec![0.0; n]; n];
    for (x, row) in rows.iter_mut().enumerate() {
        let total: f64 = g
            .neighbors(x)
            .iter()
            .map(|&(_, e)| edge_weight(e, traversed, delta))
            .sum();
        for &(y, e) in g.neighbors(x) {
            row[y] = edge_weight(e, traversed, delta) / total;
        }
    }
    Kernel::new(rows)
}

/// Lifted kernel `p_{E'}` on oriented edges: `p(z₁, z₂)` equals the base
/// kernel's probability of the move `tail(z₂) → head(z₂)` whenever
/// `head(z₁) = tail(z₂)`, and zero otherwise.
pub fn lifted_kernel(
    g: &FiniteGraph,
    lifted: &LiftedGraph,
    traversed: EdgeSubset,
    delta: f64,
) -> Result<Kernel, KernelError> {
    let base = base_kernel(g, traversed, delta)?;
    let m = lifted.n_arcs();
    let mut rows = vec![vec![0.0; m]; m];
    for (z1, row) in rows.iter_mut().enumerate() {
        for &z2 in lifted.out_arcs(z1) {
            row[z2] = base.get(lifted.tail(z2), lifted.head(z2));
        }
    }
    Kernel::new(rows)
}

/// Relative entropy `R(γ ‖ ρ) = Σ_i γ(i) log(γ(i)/ρ(i))` in nats, with
/// `0·log 0 = 0` and `+∞` when `γ` puts mass outside the support of `ρ`.
pub fn relative_entropy(gamma: &Measure, rho: &Measure) -> Ext {
    assert_eq!(gamma.len(), rho.len(), "measures on different index sets");
    let mut sum = 0.0;
    for i in 0..gamma.len() {
        if !gamma.carries(i) {
            continue;
        }
        if !rho.carries(i) {
            return Ext::PosInf;
        }
        sum += gamma.get(i) * (gamma.get(i) / rho.get(i)).ln();
    }
    Ext::Finite(sum)
}

/// Mean per-step entropy cost of running kernel `q̂` instead of `p̂` under
/// the occupation measure `ν`:
///
/// ```text
/// Σ_x ν(x) · R(q̂(x,·) ‖ p̂(x,·))
/// ```
///
/// `+∞` as soon as a `ν`-positive row of `q̂` leaves the support of the
/// corresponding `p̂` row.
pub fn entropy_cost(nu: &Measure, q: &Kernel, p: &Kernel) -> Ext {
    assert_eq!(nu.len(), q.n(), "measure/kernel dimension mismatch");
    assert_eq!(q.n(), p.n(), "kernel dimension mismatch");
    let mut total = 0.0;
    for x in 0..nu.len() {
        if !nu.carries(x) {
            continue;
        }
        let mut row_sum = 0.0;
        for y in 0..q.n() {
            let qq = q.get(x, y);
            if qq <= SUPPORT_EPS {
                continue;
            }
            if !p.supports(x, y) {
                return Ext::PosInf;
            }
            row_sum += qq * (qq / p.get(x, y)).ln();
        }
        total += nu.get(x) * row_sum;
    }
    Ext::Finite(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn base_kernel_star3_partially_traversed() {
        // Centre 0 with traversed e0 = {0,1} at δ = 2: weights 2 and 1.
        let g = fixtures::star3();
        let k = base_kernel(&g, EdgeSubset(0b01), 2.0).unwrap();
        assert_abs_diff_eq!(k.get(0, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(0, 2), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(1, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.get(2, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn base_kernel_delta_one_is_uniform() {
        let g = fixtures::k4();
        for mask in 0..1u32 << g.n_edges() {
            let k = base_kernel(&g, EdgeSubset(mask), 1.0).unwrap();
            for v in 0..4 {
                for &(w, _) in g.neighbors(v) {
                    assert_abs_diff_eq!(k.get(v, w), 1.0 / 3.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn base_kernel_full_set_is_srw_for_every_delta() {
        let g = fixtures::paw();
        for &delta in &[0.3, 1.0, 2.0, 7.0] {
            let k = base_kernel(&g, g.full_edge_set(), delta).unwrap();
            for v in 0..g.n_vertices() {
                for &(w, _) in g.neighbors(v) {
                    assert_abs_diff_eq!(
                        k.get(v, w),
                        1.0 / g.degree(v) as f64,
                        epsilon = 1e-15
                    );
                }
            }
        }
    }

    #[test]
    fn base_kernel_positive_exactly_on_neighbours() {
        let g = fixtures::cycle4();
        let k = base_kernel(&g, EdgeSubset(0b0011), 0.5).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let adjacent = g.edge_between(x, y).is_some();
                assert_eq!(k.supports(x, y), adjacent, "support pattern at ({x},{y})");
            }
        }
    }

    #[test]
    fn base_kernel_rejects_nonpositive_delta() {
        let g = fixtures::star3();
        assert!(base_kernel(&g, EdgeSubset(0b01), 0.0).is_err());
        assert!(base_kernel(&g, EdgeSubset(0b01), -1.0).is_err());
    }

    #[test]
    fn lifted_kernel_star3_traversed_first_edge() {
        // Arc (e0, −) has head 0; arc (e1, +) runs 0 → 2, a fresh edge at
        // δ = 2, so the step weighs 1 against total 3.
        let g = fixtures::star3();
        let l = crate::graph::LiftedGraph::new(&g);
        let k = lifted_kernel(&g, &l, EdgeSubset(0b01), 2.0).unwrap();
        let back_e0 = l.arc(0, false); // 1 -> 0
        let out_e1 = l.arc(1, true); // 0 -> 2
        assert_abs_diff_eq!(k.get(back_e0, out_e1), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn lifted_kernel_srw_uniform_rows() {
        let g = fixtures::triangle();
        let l = crate::graph::LiftedGraph::new(&g);
        let k = lifted_kernel(&g, &l, EdgeSubset(0b101), 1.0).unwrap();
        for z in 0..l.n_arcs() {
            for &z2 in l.out_arcs(z) {
                assert_abs_diff_eq!(k.get(z, z2), 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn relative_entropy_examples() {
        let half = Measure::probability(vec![0.5, 0.5]).unwrap();
        let point = Measure::probability(vec![1.0, 0.0]).unwrap();
        assert_eq!(relative_entropy(&half, &half), Ext::Finite(0.0));
        assert_abs_diff_eq!(
            relative_entropy(&point, &half).unwrap_finite(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_eq!(relative_entropy(&half, &point), Ext::PosInf);
    }

    #[test]
    fn relative_entropy_nonnegative_zero_only_at_equality() {
        let a = Measure::probability(vec![0.2, 0.3, 0.5]).unwrap();
        let b = Measure::probability(vec![0.5, 0.25, 0.25]).unwrap();
        let r = relative_entropy(&a, &b).unwrap_finite();
        assert!(r > 0.0, "distinct probabilities have positive divergence");
    }

    #[test]
    fn measure_validation() {
        assert!(Measure::new(vec![0.1, -0.2]).is_err());
        assert!(Measure::probability(vec![0.3, 0.3]).is_err());
        let m = Measure::new(vec![1e-16, 0.5]).unwrap();
        assert_eq!(m.support(), vec![1], "sub-threshold mass is not support");
    }

    #[test]
    fn entropy_cost_matches_hand_computation_on_star3() {
        // ν = (½, ½, 0), q̂ shuttles 0 ↔ 1 deterministically, base kernel has
        // traversed {e0}.  Cost = ½·log((1+δ)/δ).
        let g = fixtures::star3();
        let nu = Measure::probability(vec![0.5, 0.5, 0.0]).unwrap();
        let q = Kernel::new(vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0], // irrelevant: ν(2) = 0
        ])
        .unwrap();
        for &delta in &[0.5, 1.0, 2.0, 7.0] {
            let p = base_kernel(&g, EdgeSubset(0b01), delta).unwrap();
            let cost = entropy_cost(&nu, &q, &p).unwrap_finite();
            assert_abs_diff_eq!(cost, 0.5 * ((1.0 + delta) / delta).ln(), epsilon = 1e-14);
        }
    }

    #[test]
    fn entropy_cost_zero_when_kernels_agree() {
        let g = fixtures::path4();
        let p = base_kernel(&g, EdgeSubset(0b011), 3.0).unwrap();
        let nu = Measure::uniform(4);
        assert_eq!(entropy_cost(&nu, &p, &p), Ext::Finite(0.0));
    }

    #[test]
    fn entropy_cost_infinite_off_support() {
        // q̂ jumps 0 → 2 on the path 0–1–2, which p̂ cannot do.
        let g = fixtures::path3();
        let p = base_kernel(&g, g.full_edge_set(), 1.0).unwrap();
        let q = Kernel::new(vec![
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let nu = Measure::uniform(3);
        assert_eq!(entropy_cost(&nu, &q, &p), Ext::PosInf);
    }

    #[test]
    fn arc_marginals() {
        let g = fixtures::star3();
        let l = crate::graph::LiftedGraph::new(&g);
        let mu = Measure::probability(vec![0.25, 0.25, 0.1, 0.4]).unwrap();
        let edge = arc_edge_marginal(&mu);
        assert_abs_diff_eq!(edge.get(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(edge.get(1), 0.5, epsilon = 1e-15);
        // Tails: arc0 = e0 reverse (tail 1), arc1 = e0 forward (tail 0),
        // arc2 = e1 reverse (tail 2), arc3 = e1 forward (tail 0).
        let tail = arc_tail_marginal(&l, &mu, 3);
        assert_abs_diff_eq!(tail.get(0), 0.25 + 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(tail.get(1), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(tail.get(2), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn ext_ordering_and_min() {
        assert!(Ext::Finite(3.0) < Ext::PosInf);
        assert_eq!(Ext::PosInf.min(Ext::Finite(2.0)), Ext::Finite(2.0));
        assert_eq!(Ext::Finite(1.0) + Ext::PosInf, Ext::PosInf);
    }
}
