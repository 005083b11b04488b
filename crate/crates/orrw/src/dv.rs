//! The per-subgraph empirical-measure cost `J_{E'}(ν)`: the cheapest
//! relative-entropy rate at which a stationary walk along the traversed
//! subgraph `E'` can hold occupation measure `ν` against the reinforced
//! kernel `p̂_{E'}`.
//!
//! Three views of the same quantity live here:
//!
//! * [`dv_functional`] — the convex flow form: minimise
//!   `Σ f(x,y) log(f(x,y)/(ν(x)·p̂_{E'}(x,y)))` over circulations `f`
//!   supported on the directed edges of `E'` with vertex marginal `ν`
//!   (equivalently over stationary kernels `q̂` via `f = ν ⊗ q̂`).  This is
//!   the value of record.
//! * [`dv_via_potential`] — the dual `−inf_{u>0} Σ ν log((p̂_{E'}u)/u)`,
//!   maximised by gradient ascent over log-potentials.  Used strictly as a
//!   numerical cross-check.
//! * [`tree_kernel`] — on trees the stationary kernel with marginal `ν` is
//!   unique and reconstructible in closed form by a leaves-up recursion, no
//!   optimisation involved.
//!
//! [`kkt_check`] audits a claimed optimum: at an interior optimum the log
//! likelihood ratio `log(q̂/p̂)` must split as `A(tail) + B(head)` across the
//! support (the incoming-transition-equality first-order condition), so its
//! least-squares decomposition residual is ~0 at optima and visibly positive
//! at perturbed circulations.

use thiserror::Error;

use crate::flow::{circulation_feasible, FlowArc, FlowError, FlowProblem, MarginalSpec};
use crate::graph::{EdgeSubset, FiniteGraph, LiftedGraph};
use crate::kernel::{base_kernel, Ext, Kernel, KernelError, Measure};

/// Gradient-ascent iteration cap for the potential dual.
pub const POTENTIAL_MAX_ITERS: usize = 100_000;

/// Infinity-norm gradient tolerance for the potential dual.
pub const POTENTIAL_GRAD_TOL: f64 = 1e-10;

/// Gradient bound under which a line-search stall counts as convergence.
///
/// Near the optimum the Armijo improvement `0.25 · step · ‖g‖²` drops below
/// the rounding noise of the objective once `‖g‖ ≲ 1e-8`, so the search can
/// no longer certify progress even though the value is converged to machine
/// precision.  A stall with gradient this small is success; a stall with a
/// large gradient still reports [`DvError::PotentialStalled`] (it signals a
/// maximiser at infinity, as happens on the feasibility boundary).
pub const POTENTIAL_STALL_TOL: f64 = 1e-6;

/// Flows below this threshold are ignored by the KKT audit.
pub const KKT_FLOW_EPS: f64 = 1e-12;

/// Errors from the Donsker–Varadhan layer.
#[derive(Debug, Error)]
pub enum DvError {
    #[error("measure puts mass on vertex {0}, outside the subgraph's vertex set")]
    SupportViolation(usize),
    #[error("potential ascent stalled before reaching tolerance (best value {best}, gradient norm {grad})")]
    PotentialStalled { best: f64, grad: f64 },
    #[error("graph is not a tree (needs |E| = |V| - 1)")]
    NotATree,
    #[error("no stationary kernel on the tree has marginal ν (negative flow at vertex {0})")]
    TreeInfeasible(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// A circulation: non-negative mass on directed edges with conservation at
/// every vertex.  Encodes the stationary pair `(ν, q̂)` via
/// `f(x,y) = ν(x)·q̂(x,y)`.
#[derive(Clone, Debug)]
pub struct Circulation {
    /// `(tail, head, mass)` per directed pair carrying flow.
    pub arcs: Vec<(usize, usize, f64)>,
    /// Vertex marginal `m(x) = Σ_y f(x,y)`.
    pub marginal: Vec<f64>,
}

impl Circulation {
    fn from_flow(problem: &FlowProblem, flows: &[f64], n_vertices: usize) -> Circulation {
        let mut marginal = vec![0.0; n_vertices];
        let mut arcs = Vec::new();
        for (a, &f) in problem.arcs.iter().zip(flows) {
            if f > KKT_FLOW_EPS {
                arcs.push((a.tail, a.head, f));
                marginal[a.tail] += f;
            }
        }
        Circulation { arcs, marginal }
    }

    /// The stationary kernel `q̂(x,y) = f(x,y)/m(x)` on the support; rows of
    /// zero-mass vertices are empty.
    pub fn kernel_rows(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.marginal.len();
        let mut rows = vec![Vec::new(); n];
        for &(x, y, f) in &self.arcs {
            if self.marginal[x] > 0.0 {
                rows[x].push((y, f / self.marginal[x]));
            }
        }
        rows
    }

    /// Largest conservation violation `|in(x) − out(x)|`.
    pub fn conservation_residual(&self) -> f64 {
        let n = self.marginal.len();
        let mut inflow = vec![0.0; n];
        for &(_, y, f) in &self.arcs {
            inflow[y] += f;
        }
        (0..n)
            .map(|x| (inflow[x] - self.marginal[x]).abs())
            .fold(0.0, f64::max)
    }
}

/// Result of a [`dv_functional`] evaluation.
#[derive(Clone, Debug)]
pub struct DvResult {
    /// The cost `J_{E'}(ν)` in nats; `+∞` when no stationary kernel along
    /// `E'` has marginal `ν`.
    pub value: Ext,
    /// An attaining circulation, when the value is finite.
    pub circulation: Option<Circulation>,
    /// First-order-condition residual of the attaining circulation.
    pub kkt_residual: Option<f64>,
}

/// Directed arcs of `sub` with the log probabilities of the walk whose
/// traversed set is `sub`, as flow-program arcs of stage `stage`.
pub(crate) fn confined_arcs(
    g: &FiniteGraph,
    stage: usize,
    sub: EdgeSubset,
    delta: f64,
) -> Result<Vec<FlowArc>, KernelError> {
    let lifted = LiftedGraph::new(g);
    let k = base_kernel(g, sub, delta)?;
    Ok(lifted
        .arcs_of_subset(sub)
        .into_iter()
        .map(|z| {
            let (t, h) = (lifted.tail(z), lifted.head(z));
            FlowArc { stage, tail: t, head: h, log_base: k.get(t, h).ln() }
        })
        .collect())
}

/// The cost `J_{E'}(ν)`: minimal mean entropy rate of a stationary kernel
/// along `E'` with occupation measure `ν`, relative to the walk confined to
/// the traversed set `E'`.  `+∞` exactly when no circulation on `E'` has
/// marginal `ν`.
pub fn dv_functional(
    g: &FiniteGraph,
    sub: EdgeSubset,
    nu: &Measure,
    delta: f64,
) -> Result<DvResult, DvError> {
    let verts = g.vertex_set(sub);
    for x in nu.support() {
        if !verts[x] {
            return Err(DvError::SupportViolation(x));
        }
    }
    let problem = FlowProblem {
        n_vertices: g.n_vertices(),
        n_stages: 1,
        arcs: confined_arcs(g, 0, sub, delta)?,
        marginal: MarginalSpec::Fixed(nu.as_slice().to_vec()),
    };
    match problem.solve() {
        Ok(sol) => {
            let circulation = Circulation::from_flow(&problem, &sol.flows, g.n_vertices());
            let kernel = base_kernel(g, sub, delta)?;
            let kkt = kkt_check(&circulation, &kernel);
            Ok(DvResult {
                value: Ext::Finite(sol.value.max(0.0)),
                circulation: Some(circulation),
                kkt_residual: Some(kkt),
            })
        }
        Err(FlowError::Infeasible) => {
            Ok(DvResult { value: Ext::PosInf, circulation: None, kkt_residual: None })
        }
        Err(e) => Err(e.into()),
    }
}

/// The potential-form dual `−inf_{u>0} Σ_x ν(x) log((p̂_{E'}u)(x)/u(x))`,
/// evaluated by gradient ascent on `w = log u` with Armijo backtracking.
/// Cross-check only; agrees with [`dv_functional`] at feasible `ν`.
pub fn dv_via_potential(
    g: &FiniteGraph,
    sub: EdgeSubset,
    nu: &Measure,
    delta: f64,
) -> Result<f64, DvError> {
    let verts = g.vertex_set(sub);
    for x in nu.support() {
        if !verts[x] {
            return Err(DvError::SupportViolation(x));
        }
    }
    // The dual is unbounded above at infeasible ν; detect that first.
    let lifted = LiftedGraph::new(g);
    let pairs: Vec<(usize, usize)> = lifted
        .arcs_of_subset(sub)
        .into_iter()
        .map(|z| (lifted.tail(z), lifted.head(z)))
        .collect();
    if !circulation_feasible(g.n_vertices(), &pairs, nu.as_slice()) {
        return Err(DvError::Flow(FlowError::Infeasible));
    }
    let p = base_kernel(g, sub, delta)?;
    let n = g.n_vertices();
    // Objective F(w) = Σ ν(x) (w(x) − log Σ_y p(x,y) e^{w(y)}), to maximise.
    let value_of = |w: &[f64]| -> f64 {
        let mut total = 0.0;
        for x in nu.support() {
            total += nu.get(x) * (w[x] - log_row_sum(&p, x, w));
        }
        total
    };
    let grad_of = |w: &[f64]| -> Vec<f64> {
        let mut grad = vec![0.0; n];
        for x in nu.support() {
            grad[x] += nu.get(x);
            let ls = log_row_sum(&p, x, w);
            for y in 0..n {
                let pxy = p.get(x, y);
                if pxy > 0.0 {
                    grad[y] -= nu.get(x) * (pxy.ln() + w[y] - ls).exp();
                }
            }
        }
        grad
    };
    let mut w = vec![0.0; n];
    let mut fw = value_of(&w);
    let mut step = 1.0;
    for _ in 0..POTENTIAL_MAX_ITERS {
        let grad = grad_of(&w);
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= POTENTIAL_GRAD_TOL {
            return Ok(fw);
        }
        let gsq: f64 = grad.iter().map(|g| g * g).sum();
        step *= 2.0;
        let mut advanced = false;
        loop {
            let trial: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| wi + step * gi).collect();
            let ft = value_of(&trial);
            // `ft > fw` keeps rounding-level "improvements" (where the Armijo
            // threshold underflows to fw itself) from being accepted forever.
            if ft > fw && ft >= fw + 0.25 * step * gsq {
                w = trial;
                fw = ft;
                advanced = true;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !advanced {
            if gnorm <= POTENTIAL_STALL_TOL {
                return Ok(fw);
            }
            return Err(DvError::PotentialStalled { best: fw, grad: gnorm });
        }
    }
    let grad = grad_of(&w);
    let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gnorm <= POTENTIAL_STALL_TOL {
        return Ok(fw);
    }
    Err(DvError::PotentialStalled { best: fw, grad: gnorm })
}

fn log_row_sum(p: &Kernel, x: usize, w: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for y in 0..w.len() {
        if p.get(x, y) > 0.0 {
            m = m.max(w[y]);
        }
    }
    let mut s = 0.0;
    for y in 0..w.len() {
        let pxy = p.get(x, y);
        if pxy > 0.0 {
            s += pxy * (w[y] - m).exp();
        }
    }
    m + s.ln()
}

/// On a tree, the unique stationary kernel with marginal `ν` (when one
/// exists): net flow across every edge vanishes, so a leaves-up sweep of the
/// support subtree determines every edge flow, and `q̂ = f/ν` row-wise.
/// Rows at zero-mass vertices are filled with the unreinforced walk so the
/// result is a valid kernel everywhere.
pub fn tree_kernel(g: &FiniteGraph, nu: &Measure) -> Result<Kernel, DvError> {
    if g.n_edges() != g.n_vertices() - 1 {
        return Err(DvError::NotATree);
    }
    let n = g.n_vertices();
    let root = nu.support().first().copied().unwrap_or(0);
    // Orient the tree away from `root`: parent[] and a bottom-up order.
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(x) = stack.pop() {
        order.push(x);
        for &(y, _) in g.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                stack.push(y);
            }
        }
    }
    // Symmetric edge flows: up[x] = f(x, parent x) = f(parent x, x).
    let mut up = vec![0.0; n];
    for &x in order.iter().rev() {
        if x == root {
            continue;
        }
        let child_sum: f64 = g
            .neighbors(x)
            .iter()
            .filter(|&&(y, _)| parent[y] == x)
            .map(|&(y, _)| up[y])
            .sum();
        up[x] = nu.get(x) - child_sum;
        if up[x] < -1e-12 {
            return Err(DvError::TreeInfeasible(x));
        }
        up[x] = up[x].max(0.0);
    }
    let root_children: f64 = g
        .neighbors(root)
        .iter()
        .filter(|&&(y, _)| parent[y] == root)
        .map(|&(y, _)| up[y])
        .sum();
    if (root_children - nu.get(root)).abs() > 1e-9 {
        return Err(DvError::TreeInfeasible(root));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for (x, row) in rows.iter_mut().enumerate() {
        if nu.carries(x) {
            for &(y, _) in g.neighbors(x) {
                let f = if parent[y] == x { up[y] } else if parent[x] == y { up[x] } else { 0.0 };
                row[y] = f / nu.get(x);
            }
            // Guard against rounding drift in the row sum.
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                for v in row.iter_mut() {
                    *v /= s;
                }
            } else {
                return Err(DvError::TreeInfeasible(x));
            }
        } else {
            for &(y, _) in g.neighbors(x) {
                row[y] = 1.0 / g.degree(x) as f64;
            }
        }
    }
    Ok(Kernel::new(rows)?)
}

/// First-order-condition audit of a circulation against the base kernel: the
/// least-squares residual of decomposing `log(q̂/p̂)(x,y)` as
/// `A(x) + B(y)` over arcs with flow above [`KKT_FLOW_EPS`].  Optima of
/// [`dv_functional`] satisfy the decomposition (incoming-transition
/// equality), so the residual is ≤ 1e−6 there and visibly positive at
/// off-optimum circulations.
pub fn kkt_check(circulation: &Circulation, base: &Kernel) -> f64 {
    let n = circulation.marginal.len();
    // Equations r_a = A(tail_a) + B(head_a), unknowns (A, B) ∈ R^{2n}.
    let mut rs = Vec::new();
    let mut tails = Vec::new();
    let mut heads = Vec::new();
    for &(x, y, f) in &circulation.arcs {
        if f <= KKT_FLOW_EPS || circulation.marginal[x] <= KKT_FLOW_EPS {
            continue;
        }
        let q = f / circulation.marginal[x];
        rs.push(q.ln() - base.get(x, y).ln());
        tails.push(x);
        heads.push(y);
    }
    if rs.is_empty() {
        return 0.0;
    }
    // Normal equations with a tiny ridge to absorb the A ↦ A+c, B ↦ B−c
    // gauge freedom (the ridge moves the fit along the null space only).
    let dim = 2 * n;
    let mut ata = vec![vec![0.0; dim]; dim];
    let mut atb = vec![0.0; dim];
    for i in 0..rs.len() {
        let cols = [tails[i], n + heads[i]];
        for &c1 in &cols {
            atb[c1] += rs[i];
            for &c2 in &cols {
                ata[c1][c2] += 1.0;
            }
        }
    }
    for (d, row) in ata.iter_mut().enumerate() {
        row[d] += 1e-9;
    }
    let sol = solve_dense(ata, atb);
    let mut worst = 0.0f64;
    for i in 0..rs.len() {
        let fit = sol[tails[i]] + sol[n + heads[i]];
        worst = worst.max((rs[i] - fit).abs());
    }
    worst
}

/// Gaussian elimination with partial pivoting for the small symmetric
/// systems of the KKT audit.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..n {
            let factor = a[row][col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = if a[col][col].abs() < 1e-300 { 0.0 } else { s / a[col][col] };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn prob(v: Vec<f64>) -> Measure {
        Measure::probability(v).unwrap()
    }

    #[test]
    fn star3_forced_circulation_value() {
        let g = fixtures::star3();
        let nu = prob(vec![0.5, 0.5, 0.0]);
        for &delta in &[0.5f64, 1.0, 2.0, 7.0] {
            let res = dv_functional(&g, EdgeSubset(0b01), &nu, delta).unwrap();
            assert_abs_diff_eq!(
                res.value.unwrap_finite(),
                0.5 * ((1.0 + delta) / delta).ln(),
                epsilon = 1e-9
            );
            assert!(res.kkt_residual.unwrap() <= 1e-6);
        }
    }

    #[test]
    fn full_graph_srw_stationary_measure_is_free() {
        for g in [fixtures::star3(), fixtures::path3(), fixtures::path4(), fixtures::triangle()] {
            let total: f64 = (0..g.n_vertices()).map(|v| g.degree(v) as f64).sum();
            let nu = prob((0..g.n_vertices()).map(|v| g.degree(v) as f64 / total).collect());
            let res = dv_functional(&g, g.full_edge_set(), &nu, 3.0).unwrap();
            assert_abs_diff_eq!(res.value.unwrap_finite(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_only_at_srw_stationary_measure() {
        // J_E(ν) > 0 for a feasible ν distinct from the degree measure.
        let g = fixtures::path4();
        let nu = prob(vec![0.25, 0.25, 0.25, 0.25]);
        let res = dv_functional(&g, g.full_edge_set(), &nu, 1.0).unwrap();
        assert!(res.value.unwrap_finite() > 1e-3);
    }

    #[test]
    fn point_mass_at_leaf_is_infinite() {
        let g = fixtures::star3();
        let nu = prob(vec![0.0, 1.0, 0.0]);
        let res = dv_functional(&g, EdgeSubset(0b01), &nu, 2.0).unwrap();
        assert_eq!(res.value, Ext::PosInf);
        assert!(res.circulation.is_none());
    }

    #[test]
    fn support_violation_is_an_error() {
        let g = fixtures::star3();
        let nu = prob(vec![0.5, 0.25, 0.25]);
        // E' = {e0} covers vertices {0, 1}; mass at 2 violates support.
        assert!(matches!(
            dv_functional(&g, EdgeSubset(0b01), &nu, 1.0).unwrap_err(),
            DvError::SupportViolation(2)
        ));
    }

    #[test]
    fn potential_dual_matches_primal() {
        let g = fixtures::star3();
        let nu = prob(vec![0.5, 0.5, 0.0]);
        for &delta in &[0.5f64, 1.0, 2.0] {
            let primal = dv_functional(&g, EdgeSubset(0b01), &nu, delta)
                .unwrap()
                .value
                .unwrap_finite();
            let dual = dv_via_potential(&g, EdgeSubset(0b01), &nu, delta).unwrap();
            assert_abs_diff_eq!(primal, dual, epsilon = 1e-6);
        }
    }

    #[test]
    fn potential_dual_matches_primal_on_larger_cases() {
        let g = fixtures::triangle();
        let full = g.full_edge_set();
        for nu in [prob(vec![1.0 / 3.0; 3]), prob(vec![0.45, 0.3, 0.25]), prob(vec![0.3, 0.45, 0.25])]
        {
            for &delta in &[0.7f64, 1.0, 2.0] {
                let primal = dv_functional(&g, full, &nu, delta).unwrap().value.unwrap_finite();
                let dual = dv_via_potential(&g, full, &nu, delta).unwrap();
                assert_abs_diff_eq!(primal, dual, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn potential_dual_rejects_infeasible_measure() {
        let g = fixtures::star3();
        let nu = prob(vec![0.3, 0.6, 0.1]);
        assert!(matches!(
            dv_via_potential(&g, g.full_edge_set(), &nu, 1.0).unwrap_err(),
            DvError::Flow(FlowError::Infeasible)
        ));
    }

    #[test]
    fn tree_kernel_path3_half_split() {
        let g = fixtures::path3();
        let q = tree_kernel(&g, &prob(vec![0.25, 0.5, 0.25])).unwrap();
        assert_abs_diff_eq!(q.get(1, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(1, 2), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(0, 1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.get(2, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tree_kernel_leaves_point_to_parent() {
        let g = fixtures::star4();
        let q = tree_kernel(&g, &prob(vec![0.5, 0.2, 0.2, 0.1])).unwrap();
        for leaf in 1..4 {
            assert_abs_diff_eq!(q.get(leaf, 0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tree_kernel_path4_alternating_sum_formula() {
        // q̂(i, i−1) = Σ_{j≤i} (−1)^{j−1} ν(i−j) / ν(i) on the path.
        let g = fixtures::path4();
        let nu = [0.15, 0.35, 0.35, 0.15];
        let q = tree_kernel(&g, &prob(nu.to_vec())).unwrap();
        for i in 1..4 {
            let mut s = 0.0;
            for j in 1..=i {
                s += if j % 2 == 1 { nu[i - j] } else { -nu[i - j] };
            }
            assert_abs_diff_eq!(q.get(i, i - 1), s / nu[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn tree_kernel_stationarity() {
        let g = fixtures::path4();
        let nu = prob(vec![0.15, 0.35, 0.35, 0.15]);
        let q = tree_kernel(&g, &nu).unwrap();
        let pushed = q.push(&nu);
        for x in 0..4 {
            assert_abs_diff_eq!(pushed.get(x), nu.get(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn tree_kernel_detects_infeasible_measure() {
        // On a path, ν(0) > ν(1) forces negative flow on edge {1,2}.
        let g = fixtures::path4();
        let res = tree_kernel(&g, &prob(vec![0.5, 0.3, 0.1, 0.1]));
        assert!(matches!(res.unwrap_err(), DvError::TreeInfeasible(_)));
    }

    #[test]
    fn tree_kernel_rejects_non_tree() {
        let g = fixtures::triangle();
        assert!(matches!(
            tree_kernel(&g, &prob(vec![1.0 / 3.0; 3])).unwrap_err(),
            DvError::NotATree
        ));
    }

    #[test]
    fn kkt_residual_flags_perturbed_circulation() {
        // A lopsided rotation on the triangle is conservative with uniform
        // marginal but violates the first-order condition.
        let g = fixtures::triangle();
        let p = base_kernel(&g, g.full_edge_set(), 1.0).unwrap();
        let third = 1.0 / 3.0;
        let skew = Circulation {
            arcs: vec![
                (0, 1, 0.2 * third * 3.0 / 0.9),
                (1, 2, 0.2 * third * 3.0 / 0.9),
                (2, 0, 0.2 * third * 3.0 / 0.9),
                (1, 0, 0.1 * third * 3.0 / 0.9),
                (2, 1, 0.1 * third * 3.0 / 0.9),
                (0, 2, 0.1 * third * 3.0 / 0.9),
            ],
            marginal: vec![third; 3],
        };
        assert!(skew.conservation_residual() < 1e-12);
        assert!(kkt_check(&skew, &p) > 1e-3, "off-optimum circulation must fail the audit");
        // The optimum itself passes.
        let nu = prob(vec![third; 3]);
        let res = dv_functional(&g, g.full_edge_set(), &nu, 1.0).unwrap();
        assert!(res.kkt_residual.unwrap() <= 1e-6);
    }

    #[test]
    fn optimum_kkt_residual_small_on_triangle_uniform() {
        let g = fixtures::triangle();
        let nu = prob(vec![1.0 / 3.0; 3]);
        for &delta in &[0.5f64, 2.0] {
            for sub in [g.full_edge_set(), EdgeSubset(0b011)] {
                let res = dv_functional(&g, sub, &nu, delta).unwrap();
                if let Some(r) = res.kkt_residual {
                    assert!(r <= 1e-6, "kkt residual {r} too large for sub {sub}");
                }
            }
        }
    }
}
