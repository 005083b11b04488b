//! Finite simple connected graphs with a distinguished start vertex, bitmask
//! edge subsets, the family of connected start-touching subgraphs, decreasing
//! (downward-closed) subfamilies, edge-growth sequences, and the lifted
//! directed graph on oriented edges.
//!
//! Conventions used throughout the crate:
//!
//! * Vertices are indexed `0..c` in input order with the start vertex
//!   relocated to index 0, so deterministic iteration orders are stable
//!   across runs.
//! * Edges are indexed `0..b` in input order and stored with their endpoint
//!   of smaller index first.
//! * An *oriented edge* (arc) is an edge plus a direction; arc `2e + 1`
//!   traverses edge `e` from its smaller endpoint to its larger endpoint,
//!   arc `2e` the reverse.  The lifted directed graph connects arc `z₁` to
//!   arc `z₂` exactly when the head of `z₁` is the tail of `z₂`, so walks on
//!   the graph correspond to paths in the lifted graph.

use std::fmt;

use thiserror::Error;

/// Hard cap on edge count: subsets are stored in a `u32` bitmask and several
/// routines enumerate all `2^b` subsets.
pub const MAX_EDGES: usize = 20;

/// Stricter cap for the exact meta-chain, whose state count grows like
/// `2b · 2^b`.
pub const MAX_EDGES_EXACT: usize = 16;

/// Errors from graph construction and family validation.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 edges, got {0}")]
    TooFewEdges(usize),
    #[error("graph has {0} edges, above the {MAX_EDGES}-edge enumeration cap")]
    TooManyEdges(usize),
    #[error("self-loop at vertex `{0}` is not allowed")]
    SelfLoop(String),
    #[error("parallel edge `{0}`-`{1}` is not allowed")]
    ParallelEdge(String, String),
    #[error("start vertex `{0}` does not appear in the edge list")]
    StartMissing(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge index {0} out of range (graph has {1} edges)")]
    EdgeOutOfRange(usize, usize),
    #[error("anchor edge {0} is not incident to the start vertex")]
    AnchorNotAtStart(usize),
    #[error("family member {0} is not a connected start-touching subgraph")]
    MemberNotInFamily(EdgeSubset),
    #[error("family must be non-empty")]
    EmptyFamily,
    #[error("family is not downward closed: contains {member} but not its sub-member {missing}")]
    NotDecreasing { member: EdgeSubset, missing: EdgeSubset },
}

/// A subset of edge indices stored as a bitmask (bit `e` set ⇔ edge `e` in
/// the subset).  Ordering is the numeric mask order, which gives every
/// enumeration in the crate a deterministic "ascending mask" order.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EdgeSubset(pub u32);

impl EdgeSubset {
    /// The empty subset.
    pub const EMPTY: EdgeSubset = EdgeSubset(0);

    /// Subset containing exactly `edge`.
    pub fn singleton(edge: usize) -> Self {
        EdgeSubset(1 << edge)
    }

    /// Full edge set of a graph with `b` edges.
    pub fn full(b: usize) -> Self {
        EdgeSubset(if b == 32 { u32::MAX } else { (1u32 << b) - 1 })
    }

    pub fn contains(self, edge: usize) -> bool {
        self.0 >> edge & 1 == 1
    }

    #[must_use]
    pub fn with(self, edge: usize) -> Self {
        EdgeSubset(self.0 | 1 << edge)
    }

    #[must_use]
    pub fn without(self, edge: usize) -> Self {
        EdgeSubset(self.0 & !(1 << edge))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: EdgeSubset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Edge indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |e| self.contains(*e))
    }
}

impl fmt::Debug for EdgeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "e{e}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for EdgeSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A finite simple connected undirected graph with labelled vertices, indexed
/// edges, and a distinguished start vertex (always vertex index 0).
#[derive(Clone, Debug)]
pub struct FiniteGraph {
    labels: Vec<String>,
    /// Edge endpoints, smaller vertex index first.
    edges: Vec<(usize, usize)>,
    /// Per-vertex incident `(neighbour, edge index)` pairs, ascending by
    /// neighbour index.
    adj: Vec<Vec<(usize, usize)>>,
}

impl FiniteGraph {
    /// Build a validated graph from labelled edge pairs and a start label.
    ///
    /// Vertices are ordered by first appearance in the edge list with the
    /// start vertex relocated to the front; edges keep their input order.
    /// Rejects self-loops, parallel edges, a missing start label, fewer than
    /// 2 edges, more than [`MAX_EDGES`] edges, and disconnected graphs.
    pub fn build<S: AsRef<str>>(edge_pairs: &[(S, S)], start: &str) -> Result<FiniteGraph, GraphError> {
        if edge_pairs.len() < 2 {
            return Err(GraphError::TooFewEdges(edge_pairs.len()));
        }
        if edge_pairs.len() > MAX_EDGES {
            return Err(GraphError::TooManyEdges(edge_pairs.len()));
        }
        // Vertex order: first appearance, then relocate the start label to
        // the front preserving the relative order of the rest.
        let mut labels: Vec<String> = Vec::new();
        let index_of = |labels: &mut Vec<String>, s: &str| -> usize {
            match labels.iter().position(|l| l == s) {
                Some(i) => i,
                None => {
                    labels.push(s.to_owned());
                    labels.len() - 1
                }
            }
        };
        let mut raw_edges: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edge_pairs {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a == b {
                return Err(GraphError::SelfLoop(a.to_owned()));
            }
            let ia = index_of(&mut labels, a);
            let ib = index_of(&mut labels, b);
            raw_edges.push((ia, ib));
        }
        let start_pos = labels
            .iter()
            .position(|l| l == start)
            .ok_or_else(|| GraphError::StartMissing(start.to_owned()))?;
        // Relocation permutation: old index -> new index.
        let n = labels.len();
        let mut perm = vec![0usize; n];
        let mut next = 1;
        for (old, p) in perm.iter_mut().enumerate() {
            if old == start_pos {
                *p = 0;
            } else {
                *p = next;
                next += 1;
            }
        }
        let mut new_labels = vec![String::new(); n];
        for (old, label) in labels.into_iter().enumerate() {
            new_labels[perm[old]] = label;
        }
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (ia, ib) in raw_edges {
            let (mut u, mut v) = (perm[ia], perm[ib]);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            if edges.contains(&(u, v)) {
                return Err(GraphError::ParallelEdge(
                    new_labels[u].clone(),
                    new_labels[v].clone(),
                ));
            }
            edges.push((u, v));
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let g = FiniteGraph { labels: new_labels, edges, adj };
        // Connectivity over the whole vertex set.
        let full = g.full_edge_set();
        if g.reachable_vertices(full, 0).iter().filter(|&&r| r).count() != n {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Number of vertices.
    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    /// Number of edges `b`.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Start vertex index (always 0 by construction).
    pub fn start(&self) -> usize {
        0
    }

    /// Vertex label.
    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    /// Endpoints of edge `e`, smaller index first.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Degree of vertex `v` in the full graph.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Incident `(neighbour, edge index)` pairs of `v`, ascending neighbour.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// The full edge set as a subset.
    pub fn full_edge_set(&self) -> EdgeSubset {
        EdgeSubset::full(self.n_edges())
    }

    /// Edge between `u` and `v`, if present.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    /// Vertices covered by the edges of `sub` (the subgraph's vertex set),
    /// as a boolean mask.
    pub fn vertex_set(&self, sub: EdgeSubset) -> Vec<bool> {
        let mut m = vec![false; self.n_vertices()];
        for e in sub.iter().take_while(|&e| e < self.n_edges()) {
            let (u, v) = self.edges[e];
            m[u] = true;
            m[v] = true;
        }
        m
    }

    /// Vertices reachable from `from` using only edges in `sub` (vertex
    /// `from` itself is always marked).
    fn reachable_vertices(&self, sub: EdgeSubset, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n_vertices()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for &(w, e) in &self.adj[v] {
                if sub.contains(e) && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Does `sub` induce a connected subgraph?  (Vacuously false for the
    /// empty subset.)
    pub fn is_connected_subset(&self, sub: EdgeSubset) -> bool {
        let mut it = sub.iter().take_while(|&e| e < self.n_edges());
        let first = match it.next() {
            Some(e) => e,
            None => return false,
        };
        let seen = self.reachable_vertices(sub, self.edges[first].0);
        sub.iter()
            .take_while(|&e| e < self.n_edges())
            .all(|e| seen[self.edges[e].0] && seen[self.edges[e].1])
    }

    /// Does `sub` contain an edge incident to the start vertex?
    pub fn touches_start(&self, sub: EdgeSubset) -> bool {
        self.adj[0].iter().any(|&(_, e)| sub.contains(e))
    }

    /// Is `sub` a member of the subgraph family: non-empty, inducing a
    /// connected subgraph, with an edge at the start vertex?
    pub fn in_subgraph_family(&self, sub: EdgeSubset) -> bool {
        !sub.is_empty() && self.touches_start(sub) && self.is_connected_subset(sub)
    }

    /// All edge subsets that induce a connected subgraph containing an edge
    /// at the start vertex, in ascending mask order.
    ///
    /// These are exactly the sets of traversed edges the walk can exhibit,
    /// and the candidate supports of every variational problem in the crate.
    pub fn subgraph_family(&self) -> Vec<EdgeSubset> {
        let b = self.n_edges();
        (1u32..1u32 << b)
            .map(EdgeSubset)
            .filter(|&s| self.in_subgraph_family(s))
            .collect()
    }

    /// The family whose exit time is the edge cover time: every member of
    /// the subgraph family except the full edge set.
    pub fn cover_family(&self) -> DecreasingFamily {
        let full = self.full_edge_set();
        let members: Vec<EdgeSubset> = self
            .subgraph_family()
            .into_iter()
            .filter(|&s| s != full)
            .collect();
        DecreasingFamily { members }
    }

    /// Edges of `sub` adjacent to at least one edge outside `sub`.
    pub fn edge_boundary(&self, sub: EdgeSubset) -> EdgeSubset {
        let mut out = EdgeSubset::EMPTY;
        for e in sub.iter().take_while(|&e| e < self.n_edges()) {
            let (u, v) = self.edges[e];
            let touches_outside = self.adj[u]
                .iter()
                .chain(self.adj[v].iter())
                .any(|&(_, f)| !sub.contains(f));
            if touches_outside {
                out = out.with(e);
            }
        }
        out
    }

    /// All edge-growth sequences: nested chains `E₁ ⊂ … ⊂ E_b` with
    /// `|E_k| = k`, the first edge incident to the start vertex, and each
    /// new edge adjacent to the previous stage.  With `anchor`, only chains
    /// starting from that edge (which must be incident to the start vertex).
    ///
    /// Sequences are returned in lexicographic order of their added-edge
    /// lists.
    pub fn growth_sequences(
        &self,
        anchor: Option<usize>,
    ) -> Result<Vec<GrowthSequence>, GraphError> {
        let b = self.n_edges();
        let start_edges: Vec<usize> = match anchor {
            Some(e) => {
                if e >= b {
                    return Err(GraphError::EdgeOutOfRange(e, b));
                }
                if !self.adj[0].iter().any(|&(_, f)| f == e) {
                    return Err(GraphError::AnchorNotAtStart(e));
                }
                vec![e]
            }
            None => self.adj[0].iter().map(|&(_, e)| e).collect(),
        };
        let mut result = Vec::new();
        for &first in &start_edges {
            let mut stages = vec![EdgeSubset::singleton(first)];
            self.extend_growth(&mut stages, &mut result);
        }
        // DFS in ascending added-edge order per level already yields
        // lexicographic order within one anchor; anchors ascend too.
        Ok(result)
    }

    fn extend_growth(&self, stages: &mut Vec<EdgeSubset>, out: &mut Vec<GrowthSequence>) {
        let cur = *stages.last().expect("non-empty");
        if cur.len() == self.n_edges() {
            out.push(GrowthSequence { stages: stages.clone() });
            return;
        }
        let verts = self.vertex_set(cur);
        for e in 0..self.n_edges() {
            if cur.contains(e) {
                continue;
            }
            let (u, v) = self.edges[e];
            if verts[u] || verts[v] {
                stages.push(cur.with(e));
                self.extend_growth(stages, out);
                stages.pop();
            }
        }
    }
}

/// A nested chain of edge subsets `E₁ ⊂ E₂ ⊂ … ⊂ E_b` grown one adjacent
/// edge at a time from the start vertex — the possible orders in which the
/// walk can first-traverse the edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthSequence {
    stages: Vec<EdgeSubset>,
}

impl GrowthSequence {
    /// Stage `k` (0-based; stage `k` has `k + 1` edges).
    pub fn stage(&self, k: usize) -> EdgeSubset {
        self.stages[k]
    }

    /// All stages, smallest first.
    pub fn stages(&self) -> &[EdgeSubset] {
        &self.stages
    }

    /// Number of stages (equals the edge count of the graph).
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// The edge added at stage `k` (for `k ≥ 1`), or the seed edge for
    /// `k = 0`.
    pub fn added_edge(&self, k: usize) -> usize {
        let prev = if k == 0 { EdgeSubset::EMPTY } else { self.stages[k - 1] };
        let diff = EdgeSubset(self.stages[k].0 & !prev.0);
        diff.iter().next().expect("stage adds exactly one edge")
    }
}

impl fmt::Display for GrowthSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.stages.iter().enumerate() {
            if k > 0 {
                write!(f, " ⊂ ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// A non-empty, downward-closed (within the subgraph family) set of edge
/// subsets.  The first time the walk's traversed set leaves such a family is
/// a well-defined stopping time; the `cover_family` instance yields the edge
/// cover time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecreasingFamily {
    /// Members in ascending mask order.
    members: Vec<EdgeSubset>,
}

impl DecreasingFamily {
    /// Validate membership (subgraph family), non-emptiness, and downward
    /// closure, then build the family.
    pub fn new(members: Vec<EdgeSubset>, g: &FiniteGraph) -> Result<Self, GraphError> {
        let mut members = members;
        members.sort_unstable();
        members.dedup();
        Self::check_decreasing(&members, g)?;
        Ok(DecreasingFamily { members })
    }

    /// Downward closure of `seeds` within the subgraph family.
    pub fn closure(seeds: &[EdgeSubset], g: &FiniteGraph) -> Result<Self, GraphError> {
        if seeds.is_empty() {
            return Err(GraphError::EmptyFamily);
        }
        for &s in seeds {
            if !g.in_subgraph_family(s) {
                return Err(GraphError::MemberNotInFamily(s));
            }
        }
        let members: Vec<EdgeSubset> = g
            .subgraph_family()
            .into_iter()
            .filter(|&s| seeds.iter().any(|&t| s.is_subset_of(t)))
            .collect();
        Ok(DecreasingFamily { members })
    }

    /// Check the decreasing-family conditions: non-empty, every member in the
    /// subgraph family, and downward closed within it.
    pub fn check_decreasing(members: &[EdgeSubset], g: &FiniteGraph) -> Result<(), GraphError> {
        if members.is_empty() {
            return Err(GraphError::EmptyFamily);
        }
        for &m in members {
            if !g.in_subgraph_family(m) {
                return Err(GraphError::MemberNotInFamily(m));
            }
        }
        for &m in members {
            for s in g.subgraph_family() {
                if s.is_subset_of(m) && !members.contains(&s) {
                    return Err(GraphError::NotDecreasing { member: m, missing: s });
                }
            }
        }
        Ok(())
    }

    /// Is `members` a valid decreasing family for `g`?  Errors if a member is
    /// not in the subgraph family at all.
    pub fn is_decreasing(members: &[EdgeSubset], g: &FiniteGraph) -> Result<bool, GraphError> {
        if members.is_empty() {
            return Err(GraphError::EmptyFamily);
        }
        for &m in members {
            if !g.in_subgraph_family(m) {
                return Err(GraphError::MemberNotInFamily(m));
            }
        }
        Ok(Self::check_decreasing(members, g).is_ok())
    }

    /// Members in ascending mask order.
    pub fn members(&self) -> &[EdgeSubset] {
        &self.members
    }

    pub fn contains(&self, sub: EdgeSubset) -> bool {
        self.members.binary_search(&sub).is_ok()
    }

    /// Does the family contain the full edge set (so the stopping time is
    /// almost surely infinite)?
    pub fn contains_full(&self, g: &FiniteGraph) -> bool {
        self.contains(g.full_edge_set())
    }

    /// The whole subgraph family (the degenerate "never stop" family).
    pub fn whole_family(g: &FiniteGraph) -> Self {
        DecreasingFamily { members: g.subgraph_family() }
    }
}

/// The lifted directed graph: vertices are the `2b` oriented edges (arcs) of
/// the base graph; arc `z₁` points to arc `z₂` exactly when `z₁`'s head is
/// `z₂`'s tail.  The walk's oriented-edge process is the natural chain here.
#[derive(Clone, Debug)]
pub struct LiftedGraph {
    tail: Vec<usize>,
    head: Vec<usize>,
    /// Arcs with a given tail vertex, ascending arc index.
    from_vertex: Vec<Vec<usize>>,
    n_edges: usize,
}

impl LiftedGraph {
    pub fn new(g: &FiniteGraph) -> Self {
        let b = g.n_edges();
        let mut tail = vec![0usize; 2 * b];
        let mut head = vec![0usize; 2 * b];
        for e in 0..b {
            let (u, v) = g.endpoints(e);
            // Arc 2e+1 ("forward") runs u -> v; arc 2e the reverse.
            tail[2 * e + 1] = u;
            head[2 * e + 1] = v;
            tail[2 * e] = v;
            head[2 * e] = u;
        }
        let mut from_vertex = vec![Vec::new(); g.n_vertices()];
        for (a, &t) in tail.iter().enumerate() {
            from_vertex[t].push(a);
        }
        LiftedGraph { tail, head, from_vertex, n_edges: b }
    }

    /// Number of arcs (`2b`).
    pub fn n_arcs(&self) -> usize {
        self.tail.len()
    }

    /// Underlying edge of an arc.
    pub fn edge_of(&self, arc: usize) -> usize {
        arc / 2
    }

    /// Is the arc the forward orientation (smaller endpoint → larger)?
    pub fn is_forward(&self, arc: usize) -> bool {
        arc % 2 == 1
    }

    /// Arc index for `edge` in the given orientation.
    pub fn arc(&self, edge: usize, forward: bool) -> usize {
        2 * edge + usize::from(forward)
    }

    /// The arc that traverses edge `e` out of vertex `v` (an endpoint).
    pub fn arc_out_of(&self, e: usize, v: usize) -> usize {
        if self.tail[2 * e + 1] == v {
            2 * e + 1
        } else {
            debug_assert_eq!(self.tail[2 * e], v);
            2 * e
        }
    }

    pub fn tail(&self, arc: usize) -> usize {
        self.tail[arc]
    }

    pub fn head(&self, arc: usize) -> usize {
        self.head[arc]
    }

    /// The reversal of an arc (same edge, opposite orientation).
    pub fn reverse(&self, arc: usize) -> usize {
        arc ^ 1
    }

    /// Arcs whose tail is `v`, ascending.
    pub fn arcs_from(&self, v: usize) -> &[usize] {
        &self.from_vertex[v]
    }

    /// Out-neighbours of an arc: all arcs leaving its head.
    pub fn out_arcs(&self, arc: usize) -> &[usize] {
        &self.from_vertex[self.head[arc]]
    }

    /// Arcs over edges of `sub`, ascending arc index.
    pub fn arcs_of_subset(&self, sub: EdgeSubset) -> Vec<usize> {
        (0..self.n_arcs()).filter(|&a| sub.contains(self.edge_of(a))).collect()
    }

    /// Arcs of `sub` with at least one out-neighbour over an edge outside
    /// `sub` — the lifted boundary.  Always contained in
    /// (edge boundary of `sub`) × {both orientations}.
    pub fn boundary(&self, sub: EdgeSubset) -> Vec<usize> {
        self.arcs_of_subset(sub)
            .into_iter()
            .filter(|&a| {
                self.out_arcs(a).iter().any(|&z| !sub.contains(self.edge_of(z)))
            })
            .collect()
    }

    /// Short display form of an arc, e.g. `(e2,+)`.
    pub fn arc_name(&self, arc: usize) -> String {
        format!("(e{},{})", self.edge_of(arc), if self.is_forward(arc) { "+" } else { "-" })
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }
}
