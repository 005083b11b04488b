//! # orrw — a desk-scale laboratory for the once-reinforced random walk
//!
//! The δ-once-reinforced random walk (ORRW) on a finite connected graph moves
//! like a nearest-neighbour walk whose edge weights jump from 1 to δ the
//! first time an edge is traversed and never change again.  δ = 1 is the
//! simple random walk; δ > 1 attracts the walk to its own trace, δ < 1 repels
//! it.  This crate computes, exactly or variationally, the quantities that
//! govern how such a walk explores a small graph:
//!
//! * **Simulation** ([`sim`]): exact trajectory sampling with reproducible
//!   counter-based RNG streams, empirical measures, renewal and cover times,
//!   and Monte-Carlo tail-decay regression.
//! * **Exact tails** ([`exact`]): the distribution of cover-type stopping
//!   times via an absorbing meta-chain on (oriented edge, traversed set)
//!   pairs, plus Perron–Frobenius exit rates of sub-stochastic restrictions.
//! * **Entropy-minimising flows** ([`flow`], [`dv`]): the per-subgraph
//!   Donsker–Varadhan functional as a convex program over circulations, its
//!   potential-form dual, and the unique stationary kernel on trees.
//! * **Rate functions** ([`rate`]): the large-deviation rate function
//!   `I_δ(ν)` of the walk's empirical measure (a minimum over edge-growth
//!   sequences of convex-combination entropy costs) and the critical
//!   exponent `α_c(δ)` that governs `P(T > n) ≈ e^{-n α_c}` for cover-type
//!   stopping times, in three independent forms (variational, boundary
//!   decomposition, spectral).
//! * **Closed forms** ([`closed_form`]): hand-derived piecewise rate
//!   functions and exit exponents for the smallest fixtures, implemented
//!   with no shared code so the numeric solvers can be tested against them.
//!
//! The binary `orrw` exposes all of this behind a CLI that reads plain
//! edge-list files and writes CSV; `orrw verify` replays the full oracle
//! battery on built-in fixtures.

pub mod closed_form;
pub mod dv;
pub mod exact;
pub mod fixtures;
pub mod flow;
pub mod graph;
pub mod kernel;
pub mod rate;
pub mod sim;
pub mod verify;

pub mod cli;

pub use graph::{DecreasingFamily, EdgeSubset, FiniteGraph, GrowthSequence, LiftedGraph};
pub use kernel::{Ext, Kernel, Measure};
