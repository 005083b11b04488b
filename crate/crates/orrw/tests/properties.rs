//! Randomized invariants over machine-generated graphs, edge subsets, and
//! measures: kernel stochasticity and monotonicity, the boundary dichotomy
//! of reinforcement, growth-sequence structure, agreement of the three
//! exponent routes, duality of the confinement cost, and the exact engine's
//! oracles.  Each block states the invariant it defends; generators favour
//! small graphs (≤ 6 vertices) where every ingredient can also be computed
//! by an independent route.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::HashSet;

use orrw::dv::dv_functional;
use orrw::dv::dv_via_potential;
use orrw::exact::{
    brute_force_survival, build_meta_chain, exact_alpha_oracle, rational_delta, survival_curve,
    survival_curve_rational,
};
use orrw::graph::{DecreasingFamily, EdgeSubset, FiniteGraph, LiftedGraph};
use orrw::kernel::{base_kernel, lifted_kernel, relative_entropy, Kernel, Measure};
use orrw::rate::{alpha_c, alpha_c_boundary_form};
use orrw::sim;

// ---------------------------------------------------------------------------
// Generators.
// ---------------------------------------------------------------------------

/// Connected simple graph with `3..=max_n` vertices: a uniform-ish random
/// tree (each vertex attaches to an earlier one) plus up to `max_extra`
/// deduplicated chords.  Vertex labels are their construction indices and
/// the start vertex is "0", so every graph is valid by construction.
fn arb_graph(max_n: usize, max_extra: usize) -> impl Strategy<Value = FiniteGraph> {
    (3..=max_n)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec(any::<u64>(), n - 1),
                prop::collection::vec((any::<u64>(), any::<u64>()), 0..=max_extra),
            )
        })
        .prop_map(|(n, parents, extras)| {
            let mut pairs: Vec<(String, String)> = Vec::new();
            let mut seen = HashSet::new();
            for (i, pick) in parents.iter().enumerate() {
                let child = i + 1;
                let parent = (pick % child as u64) as usize;
                seen.insert((parent, child));
                pairs.push((parent.to_string(), child.to_string()));
            }
            for (a, b) in extras {
                let (mut u, mut v) = ((a % n as u64) as usize, (b % n as u64) as usize);
                if u == v {
                    continue;
                }
                if u > v {
                    std::mem::swap(&mut u, &mut v);
                }
                if seen.insert((u, v)) {
                    pairs.push((u.to_string(), v.to_string()));
                }
            }
            FiniteGraph::build(&pairs, "0").expect("a tree plus chords is simple and connected")
        })
}

/// A graph together with one member of its subgraph family (connected,
/// start-touching, non-empty edge subsets — the sets a walk can traverse).
fn arb_graph_and_member(
    max_n: usize,
    max_extra: usize,
) -> impl Strategy<Value = (FiniteGraph, EdgeSubset)> {
    arb_graph(max_n, max_extra).prop_flat_map(|g| {
        let family = g.subgraph_family();
        let len = family.len();
        (Just(g), Just(family), 0..len).prop_map(|(g, family, i)| (g, family[i]))
    })
}

/// A graph with an arbitrary (possibly empty, possibly disconnected) edge
/// subset, for invariants that hold for any traversed set.
fn arb_graph_and_subset(
    max_n: usize,
    max_extra: usize,
) -> impl Strategy<Value = (FiniteGraph, EdgeSubset)> {
    arb_graph(max_n, max_extra).prop_flat_map(|g| {
        let b = g.n_edges();
        (Just(g), 0u32..(1u32 << b)).prop_map(|(g, mask)| {
            let sub = (0..32).filter(|e| mask >> e & 1 == 1).fold(EdgeSubset::EMPTY, |s, e| s.with(e));
            (g, sub)
        })
    })
}

fn arb_delta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.3), Just(1.0), Just(2.0), Just(7.0), 0.2f64..6.0]
}

/// Row-normalized kernel on the graph's adjacency from positive weights,
/// plus its stationary vertex measure, found by power-iterating the lazy
/// mixture ½(I + Q) (same fixed point, no parity oscillation).  Stationary
/// measures of graph-supported kernels are exactly the measures carried by
/// some circulation on the arcs, so they make feasible test marginals.
fn stationary_of_random_kernel(g: &FiniteGraph, weights: &[f64]) -> (Kernel, Measure) {
    let n = g.n_vertices();
    let mut rows = vec![vec![0.0; n]; n];
    let mut w_iter = weights.iter();
    for (x, row) in rows.iter_mut().enumerate() {
        let picks: Vec<(usize, f64)> = g
            .neighbors(x)
            .iter()
            .map(|&(y, _)| (y, *w_iter.next().expect("one weight per oriented edge")))
            .collect();
        let total: f64 = picks.iter().map(|&(_, w)| w).sum();
        for (y, w) in picks {
            row[y] = w / total;
        }
    }
    let kernel = Kernel::new(rows.clone()).expect("rows normalized above");
    let lazy_rows: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(x, row)| {
            let mut r: Vec<f64> = row.iter().map(|p| 0.5 * p).collect();
            r[x] += 0.5;
            r
        })
        .collect();
    let lazy = Kernel::new(lazy_rows).expect("lazy mixture is stochastic");
    let mut nu = Measure::uniform(n);
    for _ in 0..4_000 {
        nu = lazy.push(&nu);
    }
    let residual = (0..n)
        .map(|x| (kernel.push(&nu).get(x) - nu.get(x)).abs())
        .fold(0.0, f64::max);
    assert!(residual < 1e-13, "power iteration did not converge: residual {residual:.2e}");
    (kernel, nu.normalized())
}

// ---------------------------------------------------------------------------
// Kernels: stochasticity, lifting, reinforcement monotonicity, boundary
// dichotomy.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every row of the one-step kernel is a probability vector supported
    /// exactly on the neighbours, whatever the traversed set.
    #[test]
    fn base_kernel_rows_are_probability_vectors(
        (g, sub) in arb_graph_and_subset(6, 3),
        delta in arb_delta(),
    ) {
        let k = base_kernel(&g, sub, delta).unwrap();
        for x in 0..g.n_vertices() {
            let row = k.row(x);
            let total: f64 = row.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12, "row {x} sums to {total}");
            for (y, &p) in row.iter().enumerate() {
                prop_assert!(p >= 0.0);
                prop_assert_eq!(p > 0.0, g.edge_between(x, y).is_some(),
                    "support mismatch at ({}, {})", x, y);
            }
        }
    }

    /// The arc-level kernel is row-stochastic and each transition equals the
    /// vertex-level probability of the move the target arc makes.
    #[test]
    fn lifted_kernel_projects_onto_the_base_kernel(
        (g, sub) in arb_graph_and_subset(6, 3),
    ) {
        let lifted = LiftedGraph::new(&g);
        for delta in [0.3, 1.0, 2.0, 7.0] {
            let base = base_kernel(&g, sub, delta).unwrap();
            let lk = lifted_kernel(&g, &lifted, sub, delta).unwrap();
            for z1 in 0..lifted.n_arcs() {
                let total: f64 = lk.row(z1).iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12, "arc row {z1} sums to {total}");
                let outs: HashSet<usize> = lifted.out_arcs(z1).iter().copied().collect();
                for z2 in 0..lifted.n_arcs() {
                    let expected = if outs.contains(&z2) {
                        base.get(lifted.tail(z2), lifted.head(z2))
                    } else {
                        0.0
                    };
                    prop_assert!((lk.get(z1, z2) - expected).abs() <= 1e-15,
                        "arc transition {} → {} disagrees with the base move", z1, z2);
                }
            }
        }
    }

    /// Reinforcement helps traversed edges: their one-step probability is
    /// non-decreasing in δ, pointwise over ordered pairs.
    #[test]
    fn traversed_moves_gain_probability_with_delta(
        (g, sub) in arb_graph_and_subset(6, 3),
        d1 in 0.2f64..6.0,
        d2 in 0.2f64..6.0,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let klo = base_kernel(&g, sub, lo).unwrap();
        let khi = base_kernel(&g, sub, hi).unwrap();
        for e in sub.iter().take_while(|&e| e < g.n_edges()) {
            let (u, v) = g.endpoints(e);
            for (x, y) in [(u, v), (v, u)] {
                prop_assert!(khi.get(x, y) >= klo.get(x, y) - 1e-15,
                    "traversed move {} → {} lost probability as δ grew", x, y);
            }
        }
    }

    /// Moves along a member's own edges react to δ exactly from its boundary
    /// arcs (some continuation leaves the member) and are δ-free elsewhere —
    /// the dichotomy that makes confinement costs strictly δ-sensitive.
    #[test]
    fn boundary_arcs_are_exactly_the_delta_sensitive_ones(
        (g, sub) in arb_graph_and_member(6, 3),
    ) {
        let lifted = LiftedGraph::new(&g);
        let boundary: HashSet<usize> = lifted.boundary(sub).into_iter().collect();
        for (d1, d2) in [(0.3, 1.0), (1.0, 2.0), (2.0, 7.0)] {
            let k1 = lifted_kernel(&g, &lifted, sub, d1).unwrap();
            let k2 = lifted_kernel(&g, &lifted, sub, d2).unwrap();
            for z1 in lifted.arcs_of_subset(sub) {
                for &z2 in lifted.out_arcs(z1) {
                    if !sub.contains(lifted.edge_of(z2)) {
                        continue;
                    }
                    let log_ratio = (k1.get(z1, z2) / k2.get(z1, z2)).ln();
                    if boundary.contains(&z1) {
                        prop_assert!(log_ratio < -1e-6,
                            "boundary arc {} kept a δ-free continuation {}", z1, z2);
                    } else {
                        prop_assert!(log_ratio.abs() <= 1e-12,
                            "interior arc {} reacted to δ via {}", z1, z2);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Entropy: positivity, identity of indiscernibles, Pinsker, support rule.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn relative_entropy_separates_measures(
        wg in prop::collection::vec(0.05f64..4.0, 3..8),
        wr_seed in prop::collection::vec(0.05f64..4.0, 8),
    ) {
        let n = wg.len();
        let gamma = Measure::new(wg).unwrap().normalized();
        let rho = Measure::new(wr_seed[..n].to_vec()).unwrap().normalized();

        let self_entropy = relative_entropy(&gamma, &gamma).unwrap_finite();
        prop_assert!(self_entropy.abs() <= 1e-12, "R(γ‖γ) = {self_entropy}");

        let r = relative_entropy(&gamma, &rho).unwrap_finite();
        prop_assert!(r >= -1e-13, "negative entropy {r}");
        let l1: f64 = (0..n).map(|i| (gamma.get(i) - rho.get(i)).abs()).sum();
        prop_assert!(r + 1e-9 >= l1 * l1 / 2.0,
            "Pinsker violated: R = {} below L₁²/2 = {}", r, l1 * l1 / 2.0);

        // Mass outside the reference support costs +∞.
        let mut blocked = rho.as_slice().to_vec();
        blocked[0] = 0.0;
        let blocked = Measure::new(blocked).unwrap().normalized();
        prop_assert!(!relative_entropy(&gamma, &blocked).is_finite());
    }
}

// ---------------------------------------------------------------------------
// Graph structure: growth sequences, cover family, boundary projection.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Growth sequences are nested chains from a start edge to the full edge
    /// set, adding one adjacent edge per stage, every stage a family member.
    #[test]
    fn growth_sequences_are_nested_single_edge_extensions(g in arb_graph(6, 3)) {
        let seqs = g.growth_sequences(None).unwrap();
        prop_assert!(!seqs.is_empty());
        let mut distinct = HashSet::new();
        for seq in &seqs {
            prop_assert_eq!(seq.len(), g.n_edges());
            let first = seq.stage(0);
            prop_assert_eq!(first.len(), 1);
            let e = first.iter().next().unwrap();
            let (u, v) = g.endpoints(e);
            prop_assert!(u == g.start() || v == g.start(), "seed edge misses the start");
            for k in 0..seq.len() {
                let stage = seq.stage(k);
                prop_assert_eq!(stage.len(), k + 1);
                prop_assert!(g.in_subgraph_family(stage));
                if k > 0 {
                    prop_assert!(seq.stage(k - 1).is_subset_of(stage));
                }
            }
            prop_assert_eq!(seq.stage(seq.len() - 1), g.full_edge_set());
            distinct.insert(seq.stages().to_vec());
        }
        prop_assert_eq!(distinct.len(), seqs.len(), "duplicate sequences enumerated");
    }

    /// The cover family is the subgraph family minus the full set, is
    /// downward closed, and closures of arbitrary seed sets are minimal
    /// downward-closed supersets.
    #[test]
    fn cover_family_is_the_downward_closed_proper_part(
        (g, seed) in arb_graph_and_member(6, 3),
    ) {
        let cover = g.cover_family();
        let full = g.full_edge_set();
        prop_assert!(!cover.contains(full));
        prop_assert!(DecreasingFamily::is_decreasing(cover.members(), &g).unwrap());
        for sub in g.subgraph_family() {
            prop_assert_eq!(cover.contains(sub), sub != full);
        }

        prop_assume!(seed != full);
        let closed = DecreasingFamily::closure(&[seed], &g).unwrap();
        prop_assert!(closed.contains(seed));
        prop_assert!(DecreasingFamily::is_decreasing(closed.members(), &g).unwrap());
        for &member in closed.members() {
            prop_assert!(member.is_subset_of(seed), "closure overshoots the seed");
        }
    }

    /// Arc-level boundaries project into the edge-level boundary.
    #[test]
    fn arc_boundary_projects_into_the_edge_boundary(
        (g, sub) in arb_graph_and_member(6, 3),
    ) {
        let lifted = LiftedGraph::new(&g);
        let edge_boundary = g.edge_boundary(sub);
        for arc in lifted.boundary(sub) {
            prop_assert!(sub.contains(lifted.edge_of(arc)));
            prop_assert!(edge_boundary.contains(lifted.edge_of(arc)),
                "boundary arc {} lies over a non-boundary edge", arc);
        }
    }
}

// ---------------------------------------------------------------------------
// Exponents: route agreement, positivity, strict δ-monotonicity, the
// unstoppable degenerate case.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The variational program, the arc-level boundary form, and the
    /// spectral oracle compute the same cover-time exponent.
    #[test]
    fn exponent_routes_agree_on_random_graphs(g in arb_graph(5, 2)) {
        let family = g.cover_family();
        for delta in [0.6, 1.7] {
            let variational = alpha_c(&g, delta, &family).unwrap();
            let boundary = alpha_c_boundary_form(&g, delta, &family).unwrap();
            let spectral = exact_alpha_oracle(&g, delta, &family).unwrap().alpha;
            prop_assert!(variational > 0.0);
            prop_assert!((variational - boundary).abs() <= 1e-6,
                "variational {} vs boundary {}", variational, boundary);
            prop_assert!((variational - spectral).abs() <= 1e-6,
                "variational {} vs spectral {}", variational, spectral);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// More reinforcement means heavier tails: the exponent strictly drops
    /// when δ grows, for any stoppable family.
    #[test]
    fn exponent_strictly_decreases_in_delta(
        g in arb_graph(5, 2),
        d1 in 0.3f64..2.5,
        ratio in 1.5f64..3.0,
    ) {
        let family = g.cover_family();
        let a1 = exact_alpha_oracle(&g, d1, &family).unwrap().alpha;
        let a2 = exact_alpha_oracle(&g, d1 * ratio, &family).unwrap().alpha;
        prop_assert!(a1 > a2 + 1e-6, "α({d1}) = {a1} vs α({}) = {a2}", d1 * ratio);
    }

    /// A family containing the full edge set can never be left: the oracle
    /// reports exponent zero, the chain has no reachable sink, and no
    /// simulated walk ever stops.
    #[test]
    fn whole_family_is_unstoppable(
        g in arb_graph(6, 3),
        delta in arb_delta(),
        seed in any::<u64>(),
    ) {
        let whole = DecreasingFamily::whole_family(&g);
        let oracle = exact_alpha_oracle(&g, delta, &whole).unwrap();
        prop_assert!(oracle.unstoppable);
        prop_assert_eq!(oracle.alpha, 0.0);
        let chain = build_meta_chain(&g, delta, &whole).unwrap();
        prop_assert!(!chain.sink_reachable());
        prop_assert!(chain.is_unstoppable());
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let traj = sim::run(&g, g.start(), delta, 60, &mut rng).unwrap();
        prop_assert_eq!(sim::stopping_time(&traj, &whole), None);
    }
}

// ---------------------------------------------------------------------------
// Confinement cost: duality of the two evaluations, zero exactly at the
// degree-proportional measure, finiteness at stationary marginals.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Stationary marginals of graph-supported kernels are feasible, their
    /// cost is finite and non-negative, the entropy program and the
    /// potential-form dual agree, and the KKT residual certifies optimality.
    #[test]
    fn confinement_cost_matches_its_dual_at_stationary_marginals(
        (g, weights) in arb_graph(5, 2).prop_flat_map(|g| {
            let m = 2 * g.n_edges();
            (Just(g), prop::collection::vec(0.25f64..4.0, m))
        }),
        delta in prop_oneof![Just(1.0), Just(2.3)],
    ) {
        let (_, nu) = stationary_of_random_kernel(&g, &weights);
        let full = g.full_edge_set();
        let primal = dv_functional(&g, full, &nu, delta).unwrap();
        prop_assert!(primal.value.is_finite(), "stationary marginal reported infeasible");
        let value = primal.value.unwrap_finite();
        prop_assert!(value >= -1e-12);
        prop_assert!(primal.kkt_residual.unwrap() <= 1e-6);
        let dual = dv_via_potential(&g, full, &nu, delta).unwrap();
        prop_assert!((value - dual).abs() <= 1e-6, "primal {} vs dual {}", value, dual);
    }

    /// The cost vanishes at the degree-proportional measure — the stationary
    /// law of the simple walk, which the fully-traversed walk is at any δ.
    #[test]
    fn confinement_cost_vanishes_at_the_degree_measure(
        g in arb_graph(6, 3),
        delta in arb_delta(),
    ) {
        let weights: Vec<f64> = (0..g.n_vertices()).map(|v| g.degree(v) as f64).collect();
        let nu = Measure::new(weights).unwrap().normalized();
        let result = dv_functional(&g, g.full_edge_set(), &nu, delta).unwrap();
        prop_assert!(result.value.is_finite());
        prop_assert!(result.value.unwrap_finite() <= 1e-9,
            "degree measure has positive cost {:?}", result.value);
    }
}

// ---------------------------------------------------------------------------
// Exact engine: brute-force agreement on tiny instances, curve monotonicity.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Three independent survival computations agree on tiny trees: exact
    /// rational enumeration of all trajectories, rational forward iteration,
    /// and the floating-point absorbing chain.
    #[test]
    fn survival_matches_brute_force_on_tiny_graphs(
        g in arb_graph(4, 0),
        (num, den) in prop_oneof![Just((1i64, 2i64)), Just((1, 1)), Just((2, 1)), Just((3, 1))],
    ) {
        let family = g.cover_family();
        let delta = rational_delta(num, den);
        let brute = brute_force_survival(&g, &delta, &family, 8);
        let iterated = survival_curve_rational(&g, &delta, &family, 8).unwrap();
        prop_assert_eq!(&brute, &iterated, "the two rational engines disagree");
        let chain = build_meta_chain(&g, num as f64 / den as f64, &family).unwrap();
        let curve = survival_curve(&chain, 8).unwrap();
        for (n, exact) in brute.iter().enumerate() {
            let f = exact.to_f64().unwrap();
            prop_assert!((curve.p(n) - f).abs() <= 1e-12,
                "float chain differs from rationals at n = {}: {} vs {}", n, curve.p(n), f);
        }
    }

    /// Survival curves are genuine tail functions: start at one, never
    /// increase, stay in [0, 1], and decay once the family can be left.
    #[test]
    fn survival_curves_are_monotone_tails(
        g in arb_graph(6, 3),
        delta in arb_delta(),
    ) {
        let chain = build_meta_chain(&g, delta, &g.cover_family()).unwrap();
        let curve = survival_curve(&chain, 60).unwrap();
        prop_assert_eq!(curve.p(0), 1.0);
        for n in 1..curve.len() {
            prop_assert!(curve.p(n) >= 0.0 && curve.p(n) <= 1.0);
            prop_assert!(curve.p(n) <= curve.p(n - 1) + 1e-15, "survival increased at {}", n);
            prop_assert!(curve.log_p(n) <= 1e-12);
        }
        prop_assert!(curve.tail_slope(20, 40) > 0.0, "cover-time tail must decay");
    }
}

// ---------------------------------------------------------------------------
// Simulation bookkeeping.
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Trajectory accounting: nested traversed sets growing one edge at each
    /// renewal, normalized empirical measures, and a cover-consistent
    /// stopping time.
    #[test]
    fn trajectory_bookkeeping_is_consistent(
        g in arb_graph(6, 3),
        delta in arb_delta(),
        seed in any::<u64>(),
        steps in 1usize..150,
    ) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let traj = sim::run(&g, g.start(), delta, steps, &mut rng).unwrap();
        prop_assert_eq!(traj.n_steps(), steps);
        prop_assert_eq!(traj.positions().len(), steps + 1);
        prop_assert_eq!(traj.positions()[0], g.start());

        let history = traj.traversed_history();
        prop_assert_eq!(history.len(), steps + 1);
        prop_assert!(history[0].is_empty());
        for j in 1..history.len() {
            prop_assert!(history[j - 1].is_subset_of(history[j]));
            prop_assert!(history[j].len() - history[j - 1].len() <= 1);
        }

        let renewals = traj.renewal_times();
        prop_assert_eq!(renewals[0], 0);
        prop_assert!(renewals.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(renewals.len(), traj.final_traversed().len());
        for (k, &tau) in renewals.iter().enumerate().skip(1) {
            prop_assert_eq!(history[tau].len(), k + 1);
            prop_assert_eq!(history[tau - 1].len(), k);
        }

        let occupation = traj.empirical_vertex_measure(g.n_vertices());
        prop_assert!((occupation.mass() - 1.0).abs() <= 1e-12);
        let lifted = LiftedGraph::new(&g);
        let arc_occupation = traj.lifted_empirical(&lifted);
        prop_assert!((arc_occupation.mass() - 1.0).abs() <= 1e-12);

        let cover = g.cover_family();
        match sim::stopping_time(&traj, &cover) {
            Some(tau) => {
                prop_assert_eq!(history[tau], g.full_edge_set());
                prop_assert!(history[tau - 1] != g.full_edge_set());
            }
            None => prop_assert!(history[steps] != g.full_edge_set()),
        }
    }
}
