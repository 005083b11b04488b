//! A small solver for *entropic flow programs*: minimise a relative-entropy
//! cost over non-negative flows on staged arc sets subject to per-stage flow
//! conservation and a marginal constraint.
//!
//! Every variational quantity in this crate is an instance of
//!
//! ```text
//! minimise   Φ(f) = Σ_a f(a) · log( f(a) / ( m(stage_a, tail_a) · e^{log_base_a} ) )
//! subject to per-stage conservation:  Σ_{a∈k, tail=x} f(a) = Σ_{a∈k, head=x} f(a)
//!            marginal:  Σ_k m_k = ν   (fixed)   or   Σ_a f(a) = 1   (free)
//! ```
//!
//! where `m_k(x) = Σ_{a∈k, tail=x} f(a)` are the flow's own per-stage row
//! sums and `log_base` holds the log transition probability of the arc plus
//! any linear arc cost folded in.  The objective is jointly convex (it is a
//! sum of perspectives of relative entropies), so every local minimum is
//! global.
//!
//! The solver is a majorise–minimise outer loop — freeze the row sums `m`,
//! I-project the product base measure `m(tail)·e^{log_base}` onto the affine
//! constraints, recompute `m` — whose inner projection is the classical
//! iterative proportional fitting procedure: each conservation or marginal
//! constraint admits an exact multiplicative update, and cycling through
//! them converges to the I-projection.  Freezing `m = m(f)` majorises `Φ`
//! (the gap is `KL(rows(f) ‖ m)` ≥ 0), so the outer loop descends
//! monotonically; at any fixed point the true first-order conditions hold.
//!
//! Fixed-marginal feasibility is decided exactly, before any iteration, by
//! the Gale–Hall criterion on the support digraph: a circulation with
//! marginal `ν` exists iff `ν(A) ≤ ν(N(A))` for every subset `A` of vertices
//! carrying mass, `N(A)` its out-neighbourhood.  Infeasible programs are
//! reported as such (the callers map this to a `+∞` rate), never left to the
//! optimizer to blow up on.

use thiserror::Error;

/// Objective-decrease tolerance for declaring the outer loop converged.
pub const SOLVER_TOL: f64 = 1e-12;

/// Total sweep budget across the outer loop (one sweep = one pass over all
/// constraints).
pub const SOLVER_MAX_SWEEPS: usize = 100_000;

/// Constraint residual required of the inner projection, relative to the
/// total flow mass.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Number of deterministic starts (uniform plus two perturbed copies) used
/// to guard against stalls at the boundary of the feasible region.
pub const MULTISTARTS: usize = 3;

/// Slack used by the exact feasibility pass.
const FEAS_TOL: f64 = 1e-12;

/// Errors from the flow solver.
#[derive(Debug, Error)]
pub enum FlowError {
    #[error("no circulation with the requested marginal exists")]
    Infeasible,
    #[error("solver failed to reach tolerance within {SOLVER_MAX_SWEEPS} sweeps (best residual {residual:.3e})")]
    NotConverged { residual: f64 },
    #[error("invalid flow problem: {0}")]
    BadProblem(String),
}

/// One directed arc of a staged flow program.
#[derive(Clone, Copy, Debug)]
pub struct FlowArc {
    /// Stage index (0-based).  Single-stage programs use stage 0 throughout.
    pub stage: usize,
    pub tail: usize,
    pub head: usize,
    /// `log` of the base transition weight: log kernel probability plus any
    /// linear arc cost (negated) folded in.
    pub log_base: f64,
}

/// The marginal constraint of a flow program.
#[derive(Clone, Debug)]
pub enum MarginalSpec {
    /// The aggregated row sums `Σ_k m_k` must equal this vector exactly.
    Fixed(Vec<f64>),
    /// Row sums are free; only the total mass is pinned to 1.
    FreeProbability,
}

/// A staged entropic flow program.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub n_vertices: usize,
    pub n_stages: usize,
    pub arcs: Vec<FlowArc>,
    pub marginal: MarginalSpec,
}

/// Solution of a flow program.
#[derive(Clone, Debug)]
pub struct FlowSolution {
    /// Optimal objective value `Φ(f)`.
    pub value: f64,
    /// Flow per arc, aligned with the problem's arc list.
    pub flows: Vec<f64>,
    /// Total mass per stage (`r_k` in decomposition terms).
    pub stage_mass: Vec<f64>,
    /// Aggregated vertex marginal `Σ_k m_k`.
    pub marginal: Vec<f64>,
    /// Sweeps spent by the accepted run.
    pub sweeps: usize,
}

/// Exact Gale–Hall feasibility of a circulation with marginal `nu` on the
/// digraph given by `arcs` (tail, head pairs): feasible iff for every subset
/// `A` of mass-carrying vertices, `ν(A) ≤ ν(N(A))` with `N(A)` the
/// out-neighbourhood of `A`.  Runs in `O(2^{|supp ν|})` — exact and cheap at
/// desk scale.
pub fn circulation_feasible(n_vertices: usize, arcs: &[(usize, usize)], nu: &[f64]) -> bool {
    assert!(n_vertices <= 26, "feasibility pass enumerates vertex subsets");
    assert_eq!(nu.len(), n_vertices);
    let support: Vec<usize> = (0..n_vertices).filter(|&v| nu[v] > FEAS_TOL).collect();
    if support.is_empty() {
        return true;
    }
    // Out-neighbourhood bitmasks over the support arcs between mass vertices.
    let mut out_mask = vec![0u32; n_vertices];
    for &(t, h) in arcs {
        if nu[t] > FEAS_TOL && nu[h] > FEAS_TOL {
            out_mask[t] |= 1 << h;
        }
    }
    let full: u32 = support.iter().fold(0, |m, &v| m | 1 << v);
    // Enumerate non-empty submasks of the support.
    let mut a = full;
    loop {
        let mut neigh = 0u32;
        let mut mass_a = 0.0;
        for &v in &support {
            if a >> v & 1 == 1 {
                neigh |= out_mask[v];
                mass_a += nu[v];
            }
        }
        let mass_n: f64 = support
            .iter()
            .filter(|&&v| neigh >> v & 1 == 1)
            .map(|&v| nu[v])
            .sum();
        if mass_a > mass_n + FEAS_TOL {
            return false;
        }
        if a == 0 {
            break;
        }
        a = (a - 1) & full;
        if a == 0 {
            break;
        }
    }
    true
}

/// Drop arcs that carry zero flow in every circulation with marginal `nu`:
/// when a subset `A` of the support is tight (`ν(A) = ν(N(A))`), the
/// out-flow of `A` already accounts for all mass entering `N(A)`, so any
/// arc into `N(A)` from outside `A` is frozen at zero.  Iterated to a
/// fixpoint because neighbourhoods shrink as arcs disappear.  Removing the
/// frozen arcs is what lets the scaling iteration converge on tight
/// marginals — the optimum is strictly positive on the remaining arcs,
/// instead of sitting on the boundary the iteration only reaches in the
/// limit.  For staged problems the test runs on the union of the stage arc
/// sets, which is the level at which row sums are pinned to `nu`.  Call
/// only after `circulation_feasible` has accepted `nu`.
fn drop_forced_zero_arcs(
    n_vertices: usize,
    nu: &[f64],
    arcs: &mut Vec<FlowArc>,
    original: &mut Vec<usize>,
) {
    let support: Vec<usize> = (0..n_vertices).filter(|&v| nu[v] > FEAS_TOL).collect();
    let full: u32 = support.iter().fold(0, |m, &v| m | 1 << v);
    if full == 0 {
        return;
    }
    loop {
        let mut out_mask = vec![0u32; n_vertices];
        for a in arcs.iter() {
            out_mask[a.tail] |= 1 << a.head;
        }
        let mut frozen = vec![false; n_vertices * n_vertices];
        let mut any = false;
        let mut a_mask = full;
        while a_mask != 0 {
            let mut neigh = 0u32;
            let mut mass_a = 0.0;
            for &v in &support {
                if a_mask >> v & 1 == 1 {
                    neigh |= out_mask[v];
                    mass_a += nu[v];
                }
            }
            let mass_n: f64 = support
                .iter()
                .filter(|&&v| neigh >> v & 1 == 1)
                .map(|&v| nu[v])
                .sum();
            if mass_n - mass_a <= FEAS_TOL {
                for arc in arcs.iter() {
                    if neigh >> arc.head & 1 == 1 && a_mask >> arc.tail & 1 == 0 {
                        let key = arc.tail * n_vertices + arc.head;
                        any |= !frozen[key];
                        frozen[key] = true;
                    }
                }
            }
            a_mask = (a_mask - 1) & full;
        }
        if !any {
            return;
        }
        let mut i = 0;
        while i < arcs.len() {
            if frozen[arcs[i].tail * n_vertices + arcs[i].head] {
                arcs.remove(i);
                original.remove(i);
            } else {
                i += 1;
            }
        }
    }
}

/// Deterministic perturbation in `[−½, ½]` for multistart `start` and arc
/// `a`; start 0 is exactly unperturbed.
fn perturbation(start: usize, arc: usize) -> f64 {
    if start == 0 {
        return 0.0;
    }
    let mut x = (start as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (arc as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 31;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 29;
    (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Internal index structure for one solve.
struct Plan {
    /// Arcs retained after dropping those that cannot carry mass.
    arcs: Vec<FlowArc>,
    /// Map from retained arc to original arc index.
    original: Vec<usize>,
    /// Per (stage, vertex) constraint: (out-arc indices, in-arc indices);
    /// only constraints with at least one arc on either side are kept.
    conservation: Vec<(Vec<usize>, Vec<usize>)>,
    /// For fixed marginals: per mass-carrying vertex, (target, arc indices
    /// with that tail across all stages).
    rows: Vec<(f64, Vec<usize>)>,
    total_mass: f64,
}

impl FlowProblem {
    fn plan(&self) -> Result<Plan, FlowError> {
        for a in &self.arcs {
            if a.stage >= self.n_stages || a.tail >= self.n_vertices || a.head >= self.n_vertices
            {
                return Err(FlowError::BadProblem(format!(
                    "arc ({},{}) stage {} out of bounds",
                    a.tail, a.head, a.stage
                )));
            }
            if !a.log_base.is_finite() {
                return Err(FlowError::BadProblem("non-finite log base weight".into()));
            }
        }
        let (keep, total_mass): (Vec<bool>, f64) = match &self.marginal {
            MarginalSpec::Fixed(nu) => {
                if nu.len() != self.n_vertices {
                    return Err(FlowError::BadProblem("marginal length mismatch".into()));
                }
                if nu.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                    return Err(FlowError::BadProblem("negative or non-finite marginal".into()));
                }
                // Arcs touching a zero-mass vertex can never carry flow:
                // the marginal pins row sums, conservation pins column sums.
                let keep = self
                    .arcs
                    .iter()
                    .map(|a| nu[a.tail] > FEAS_TOL && nu[a.head] > FEAS_TOL)
                    .collect();
                (keep, nu.iter().sum())
            }
            MarginalSpec::FreeProbability => (vec![true; self.arcs.len()], 1.0),
        };
        let mut arcs = Vec::new();
        let mut original = Vec::new();
        for (i, (a, k)) in self.arcs.iter().zip(&keep).enumerate() {
            if *k {
                arcs.push(*a);
                original.push(i);
            }
        }
        if let MarginalSpec::Fixed(nu) = &self.marginal {
            let pairs: Vec<(usize, usize)> = arcs.iter().map(|a| (a.tail, a.head)).collect();
            if !circulation_feasible(self.n_vertices, &pairs, nu) {
                return Err(FlowError::Infeasible);
            }
            drop_forced_zero_arcs(self.n_vertices, nu, &mut arcs, &mut original);
        }
        if arcs.is_empty() {
            return Err(FlowError::Infeasible);
        }
        let mut conservation = Vec::new();
        for k in 0..self.n_stages {
            for x in 0..self.n_vertices {
                let outs: Vec<usize> = (0..arcs.len())
                    .filter(|&i| arcs[i].stage == k && arcs[i].tail == x)
                    .collect();
                let ins: Vec<usize> = (0..arcs.len())
                    .filter(|&i| arcs[i].stage == k && arcs[i].head == x)
                    .collect();
                if !outs.is_empty() || !ins.is_empty() {
                    conservation.push((outs, ins));
                }
            }
        }
        let rows = match &self.marginal {
            MarginalSpec::Fixed(nu) => (0..self.n_vertices)
                .filter(|&x| nu[x] > FEAS_TOL)
                .map(|x| {
                    let ids: Vec<usize> =
                        (0..arcs.len()).filter(|&i| arcs[i].tail == x).collect();
                    (nu[x], ids)
                })
                .collect(),
            MarginalSpec::FreeProbability => Vec::new(),
        };
        // A mass-carrying vertex with no retained arcs is unreachable here:
        // the Gale–Hall pass already rejected it (N({x}) misses x's mass).
        Ok(Plan { arcs, original, conservation, rows, total_mass })
    }

    /// Solve the program.  Returns the best converged solution over the
    /// deterministic multistarts; `Err(Infeasible)` when no flow satisfies
    /// the constraints, `Err(NotConverged)` when every start exhausts its
    /// sweep budget (as happens when the optimum pushes a stage's mass all
    /// the way to zero, which the scaling iteration approaches only in the
    /// limit).  The residual reported is the best conservation gap reached.
    pub fn solve(&self) -> Result<FlowSolution, FlowError> {
        let plan = self.plan()?;
        let mut best: Option<FlowSolution> = None;
        let mut best_residual = f64::INFINITY;
        for start in 0..MULTISTARTS {
            match self.run_start(&plan, start) {
                Ok(sol) => {
                    if best.as_ref().is_none_or(|b| sol.value < b.value) {
                        best = Some(sol);
                    }
                }
                Err(FlowError::NotConverged { residual }) => {
                    best_residual = best_residual.min(residual);
                }
                Err(e) => return Err(e),
            }
        }
        best.ok_or(FlowError::NotConverged { residual: best_residual })
    }

    fn run_start(&self, plan: &Plan, start: usize) -> Result<FlowSolution, FlowError> {
        let n_arcs = plan.arcs.len();
        // Positive start: perturbed uniform, scaled to the target mass.
        let mut f: Vec<f64> = (0..n_arcs)
            .map(|i| 1.0 + 0.2 * perturbation(start, i))
            .collect();
        let scale = plan.total_mass / f.iter().sum::<f64>();
        for x in &mut f {
            *x *= scale;
        }
        let mut sweeps = 0usize;
        let mut prev_obj = f64::INFINITY;
        let mut converged = false;
        let mut last_residual = f64::INFINITY;
        // Majorise–minimise outer loop.
        while sweeps < SOLVER_MAX_SWEEPS {
            // Freeze current per-(stage, vertex) row sums as reference m'.
            let m = self.stage_rows(plan, &f);
            // Inner I-projection of the base measure q = m'(tail)·e^{log_base}
            // onto the affine constraint set, by cyclic multiplicative fits.
            for (i, a) in plan.arcs.iter().enumerate() {
                let mref = m[a.stage * self.n_vertices + a.tail];
                f[i] = if mref > 0.0 { mref * a.log_base.exp() } else { 0.0 };
            }
            let mut residual = f64::INFINITY;
            while sweeps < SOLVER_MAX_SWEEPS {
                sweeps += 1;
                residual = self.sweep(plan, &mut f);
                if residual <= CONSTRAINT_TOL * plan.total_mass {
                    break;
                }
            }
            let obj = self.objective(plan, &f);
            last_residual = residual;
            if (prev_obj - obj).abs() <= SOLVER_TOL
                && residual <= CONSTRAINT_TOL * plan.total_mass * 10.0
            {
                converged = true;
                break;
            }
            prev_obj = obj;
        }
        // An unconverged iterate is not a feasible flow: its constraint
        // violations let the objective undershoot the true optimum, so
        // returning it as a value would poison any minimum taken over
        // solver runs. Report failure instead of a too-good-to-be-true value.
        if !converged {
            return Err(FlowError::NotConverged {
                residual: last_residual,
            });
        }
        let value = self.objective(plan, &f);
        // Expand to the original arc list.
        let mut flows = vec![0.0; self.arcs.len()];
        for (i, &orig) in plan.original.iter().enumerate() {
            flows[orig] = f[i];
        }
        let mut stage_mass = vec![0.0; self.n_stages];
        let mut marginal = vec![0.0; self.n_vertices];
        for (a, &fv) in self.arcs.iter().zip(&flows) {
            stage_mass[a.stage] += fv;
            marginal[a.tail] += fv;
        }
        Ok(FlowSolution { value, flows, stage_mass, marginal, sweeps })
    }

    /// One pass over all constraints with exact multiplicative updates.
    /// Returns the maximum absolute violation seen *before* each fix.
    fn sweep(&self, plan: &Plan, f: &mut [f64]) -> f64 {
        let mut worst = 0.0f64;
        for (outs, ins) in &plan.conservation {
            let so: f64 = outs.iter().map(|&i| f[i]).sum();
            let si: f64 = ins.iter().map(|&i| f[i]).sum();
            worst = worst.max((so - si).abs());
            if so > 0.0 && si > 0.0 {
                let s = (si / so).sqrt();
                for &i in outs {
                    f[i] *= s;
                }
                for &i in ins {
                    f[i] /= s;
                }
            } else {
                // One side has no support: conservation forces both to zero.
                for &i in outs.iter().chain(ins) {
                    f[i] = 0.0;
                }
            }
        }
        match &self.marginal {
            MarginalSpec::Fixed(_) => {
                for (target, ids) in &plan.rows {
                    let row: f64 = ids.iter().map(|&i| f[i]).sum();
                    worst = worst.max((row - target).abs());
                    if row > 0.0 {
                        let s = target / row;
                        for &i in ids {
                            f[i] *= s;
                        }
                    }
                }
            }
            MarginalSpec::FreeProbability => {
                let total: f64 = f.iter().sum();
                worst = worst.max((total - 1.0).abs());
                if total > 0.0 {
                    for x in f.iter_mut() {
                        *x /= total;
                    }
                }
            }
        }
        worst
    }

    /// Per-(stage, vertex) row sums, flattened as `stage * n_vertices + x`.
    fn stage_rows(&self, plan: &Plan, f: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n_stages * self.n_vertices];
        for (a, &fv) in plan.arcs.iter().zip(f) {
            m[a.stage * self.n_vertices + a.tail] += fv;
        }
        m
    }

    /// The true objective `Φ(f)` with the flow's own row sums.
    fn objective(&self, plan: &Plan, f: &[f64]) -> f64 {
        let m = self.stage_rows(plan, f);
        let mut total = 0.0;
        for (a, &fv) in plan.arcs.iter().zip(f) {
            if fv <= 0.0 {
                continue;
            }
            let mref = m[a.stage * self.n_vertices + a.tail];
            total += fv * (fv.ln() - mref.ln() - a.log_base);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{EdgeSubset, FiniteGraph, LiftedGraph};
    use crate::kernel::base_kernel;
    use approx::assert_abs_diff_eq;

    /// Arcs of one stage over the directed edges of `sub` with the log
    /// probabilities of the walk confined to `sub`.
    fn stage_arcs(g: &FiniteGraph, stage: usize, sub: EdgeSubset, delta: f64) -> Vec<FlowArc> {
        let lifted = LiftedGraph::new(g);
        let k = base_kernel(g, sub, delta).unwrap();
        lifted
            .arcs_of_subset(sub)
            .into_iter()
            .map(|z| FlowArc {
                stage,
                tail: lifted.tail(z),
                head: lifted.head(z),
                log_base: k.get(lifted.tail(z), lifted.head(z)).ln(),
            })
            .collect()
    }

    #[test]
    fn feasibility_star3_centre_needs_half() {
        let g = fixtures::star3();
        let l = LiftedGraph::new(&g);
        let arcs: Vec<(usize, usize)> = (0..l.n_arcs()).map(|z| (l.tail(z), l.head(z))).collect();
        assert!(circulation_feasible(3, &arcs, &[0.5, 0.45, 0.05]));
        assert!(circulation_feasible(3, &arcs, &[0.5, 0.5, 0.0]));
        assert!(!circulation_feasible(3, &arcs, &[0.4, 0.55, 0.05]));
        assert!(!circulation_feasible(3, &arcs, &[0.0, 1.0, 0.0]), "point mass at a leaf");
    }

    #[test]
    fn feasibility_respects_missing_arcs() {
        // On the path 0-1-2 with only the first edge available, mass on
        // vertex 2 has nowhere to go.
        let arcs = vec![(0, 1), (1, 0)];
        assert!(circulation_feasible(3, &arcs, &[0.5, 0.5, 0.0]));
        assert!(!circulation_feasible(3, &arcs, &[0.4, 0.4, 0.2]));
    }

    #[test]
    fn forced_single_stage_circulation_star3() {
        // Fixed marginal (½, ½, 0) over the single edge e0: the only
        // circulation is the shuttle, value ½ log((1+δ)/δ).
        let g = fixtures::star3();
        for &delta in &[0.5f64, 1.0, 2.0, 7.0] {
            let problem = FlowProblem {
                n_vertices: 3,
                n_stages: 1,
                arcs: stage_arcs(&g, 0, EdgeSubset(0b01), delta),
                marginal: MarginalSpec::Fixed(vec![0.5, 0.5, 0.0]),
            };
            let sol = problem.solve().unwrap();
            assert_abs_diff_eq!(
                sol.value,
                0.5 * ((1.0 + delta) / delta).ln(),
                epsilon = 1e-9
            );
            for (a, &fv) in problem.arcs.iter().zip(&sol.flows) {
                assert!((fv - 0.5).abs() < 1e-9, "arc {}->{} carries {fv}", a.tail, a.head);
            }
        }
    }

    #[test]
    fn degree_stationary_measure_costs_nothing_on_full_graph() {
        for g in [fixtures::star3(), fixtures::path4(), fixtures::triangle(), fixtures::paw()] {
            let total_degree: f64 = (0..g.n_vertices()).map(|v| g.degree(v) as f64).sum();
            let nu: Vec<f64> =
                (0..g.n_vertices()).map(|v| g.degree(v) as f64 / total_degree).collect();
            let problem = FlowProblem {
                n_vertices: g.n_vertices(),
                n_stages: 1,
                arcs: stage_arcs(&g, 0, g.full_edge_set(), 1.0),
                marginal: MarginalSpec::Fixed(nu),
            };
            let sol = problem.solve().unwrap();
            assert_abs_diff_eq!(sol.value, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn infeasible_marginal_is_detected_before_iteration() {
        let g = fixtures::star3();
        let problem = FlowProblem {
            n_vertices: 3,
            n_stages: 1,
            arcs: stage_arcs(&g, 0, g.full_edge_set(), 1.0),
            marginal: MarginalSpec::Fixed(vec![0.3, 0.6, 0.1]),
        };
        assert!(matches!(problem.solve().unwrap_err(), FlowError::Infeasible));
    }

    #[test]
    fn free_marginal_value_matches_spectral_decay() {
        // inf over ν of the confined cost equals the Perron exit rate.
        for g in [fixtures::star3(), fixtures::path4(), fixtures::triangle()] {
            for &delta in &[0.5f64, 1.0, 2.0] {
                for sub in g.subgraph_family() {
                    let problem = FlowProblem {
                        n_vertices: g.n_vertices(),
                        n_stages: 1,
                        arcs: stage_arcs(&g, 0, sub, delta),
                        marginal: MarginalSpec::FreeProbability,
                    };
                    let sol = problem.solve().unwrap();
                    let spectral =
                        crate::exact::perron_decay_vertex(&g, delta, sub).unwrap();
                    assert_abs_diff_eq!(sol.value, spectral, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn two_stage_star3_attains_interior_decomposition() {
        // δ = 2, ν = (0.5, 0.45, 0.05), stages {e0} ⊂ {e0, e1}: the optimum
        // splits mass 0.6/0.4 across stages and attains
        // 0.45·log(3/2) + 0.05·log(1/2).
        let g = fixtures::star3();
        let delta = 2.0;
        let mut arcs = stage_arcs(&g, 0, EdgeSubset(0b01), delta);
        arcs.extend(stage_arcs(&g, 1, g.full_edge_set(), delta));
        let problem = FlowProblem {
            n_vertices: 3,
            n_stages: 2,
            arcs,
            marginal: MarginalSpec::Fixed(vec![0.5, 0.45, 0.05]),
        };
        let sol = problem.solve().unwrap();
        let want = 0.45 * 1.5f64.ln() + 0.05 * 0.5f64.ln();
        assert_abs_diff_eq!(sol.value, want, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.stage_mass[0], 0.6, epsilon = 1e-5);
        assert_abs_diff_eq!(sol.stage_mass[1], 0.4, epsilon = 1e-5);
    }

    #[test]
    fn objective_is_convex_along_a_segment() {
        // Values along λ·ν₁ + (1−λ)·ν₂ sit below the chord.
        let g = fixtures::triangle();
        let arcs = stage_arcs(&g, 0, g.full_edge_set(), 1.0);
        let value = |nu: Vec<f64>| {
            FlowProblem {
                n_vertices: 3,
                n_stages: 1,
                arcs: arcs.clone(),
                marginal: MarginalSpec::Fixed(nu),
            }
            .solve()
            .unwrap()
            .value
        };
        let nu1 = [0.5, 0.25, 0.25];
        let nu2 = [0.2, 0.4, 0.4];
        let v1 = value(nu1.to_vec());
        let v2 = value(nu2.to_vec());
        for &lambda in &[0.25f64, 0.5, 0.75] {
            let mix: Vec<f64> = (0..3)
                .map(|i| lambda * nu1[i] + (1.0 - lambda) * nu2[i])
                .collect();
            let vm = value(mix);
            assert!(
                vm <= lambda * v1 + (1.0 - lambda) * v2 + 1e-8,
                "convexity violated at λ={lambda}: {vm} vs chord"
            );
        }
    }

    #[test]
    fn marginal_and_conservation_hold_at_solution() {
        let g = fixtures::paw();
        let total_degree: f64 = (0..4).map(|v| g.degree(v) as f64).sum();
        let nu: Vec<f64> = (0..4).map(|v| g.degree(v) as f64 / total_degree).collect();
        let problem = FlowProblem {
            n_vertices: 4,
            n_stages: 1,
            arcs: stage_arcs(&g, 0, g.full_edge_set(), 2.0),
            marginal: MarginalSpec::Fixed(nu.clone()),
        };
        let sol = problem.solve().unwrap();
        for x in 0..4 {
            let out: f64 = problem
                .arcs
                .iter()
                .zip(&sol.flows)
                .filter(|(a, _)| a.tail == x)
                .map(|(_, &f)| f)
                .sum();
            let inn: f64 = problem
                .arcs
                .iter()
                .zip(&sol.flows)
                .filter(|(a, _)| a.head == x)
                .map(|(_, &f)| f)
                .sum();
            assert_abs_diff_eq!(out, nu[x], epsilon = 1e-9);
            assert_abs_diff_eq!(out, inn, epsilon = 1e-9);
        }
    }

    #[test]
    fn tight_marginal_freezes_cross_arcs() {
        // Uniform marginal on the path makes {0} and {3} tight, which pins
        // all mass to the two end shuttles; the middle arcs must carry
        // exactly zero and the solve must still converge to the exact value.
        let g = fixtures::path4();
        let problem = FlowProblem {
            n_vertices: 4,
            n_stages: 1,
            arcs: stage_arcs(&g, 0, g.full_edge_set(), 1.0),
            marginal: MarginalSpec::Fixed(vec![0.25; 4]),
        };
        let sol = problem.solve().unwrap();
        for (a, &f) in problem.arcs.iter().zip(&sol.flows) {
            let crossing = (a.tail, a.head) == (1, 2) || (a.tail, a.head) == (2, 1);
            if crossing {
                assert_eq!(f, 0.0);
            } else {
                assert_abs_diff_eq!(f, 0.25, epsilon = 1e-9);
            }
        }
        assert_abs_diff_eq!(sol.value, 0.5 * 2.0f64.ln(), epsilon = 1e-9);
    }
}
