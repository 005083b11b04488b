//! C ABI for the once-reinforced random walk laboratory: opaque graph
//! handles, status codes, and flat-buffer variants of the headline
//! computations (tail exponent, rate function, exact survival curve, seeded
//! simulation).
//!
//! Conventions shared by every function:
//!
//! * the return value is an [`OrrwStatus`]; output pointers are written only
//!   on `ORRW_STATUS_OK`;
//! * nothing unwinds across the boundary — panics are caught and reported as
//!   `ORRW_STATUS_INTERNAL`;
//! * the caller numbers vertices `0..n_vertices`, and every per-vertex array
//!   (such as a measure) uses that numbering;
//! * handles are not thread-safe to mutate but all operations here only read
//!   them, so a handle may be shared across threads once built.
//!
//! The matching header is generated into `include/orrw.h` at build time.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use orrw::exact::{build_meta_chain, survival_curve, ExactError};
use orrw::flow::FlowError;
use orrw::graph::FiniteGraph;
use orrw::kernel::KernelError;
use orrw::rate::{self, RateError};
use orrw::sim::{self, SimError};
use orrw::Measure;

/// Status code returned by every function in this library.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrrwStatus {
    /// Success; all output pointers were written.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// The edge list does not describe a simple connected graph on the
    /// declared vertices (2..=20 edges, every vertex used, start in range).
    InvalidGraph = 2,
    /// The reinforcement factor was not a positive finite number.
    BadDelta = 3,
    /// The measure has the wrong length, a negative entry, or mass != 1.
    BadMeasure = 4,
    /// The graph is too large for this operation's exact engine.
    UnsupportedSize = 5,
    /// The variational solver exhausted its iteration budget.
    NoConvergence = 6,
    /// A scalar argument was out of range (zero horizon, horizon above the
    /// per-sample cap, ...).
    BadArgument = 7,
    /// Unexpected internal failure (a bug; includes caught panics).
    Internal = 8,
}

/// Opaque handle to an immutable graph with a distinguished start vertex.
pub struct OrrwGraph {
    g: FiniteGraph,
    /// Caller vertex id -> internal vertex index.
    to_internal: Vec<usize>,
}

fn guard<F: FnOnce() -> OrrwStatus>(f: F) -> OrrwStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(OrrwStatus::Internal)
}

fn delta_ok(delta: f64) -> bool {
    delta > 0.0 && delta.is_finite()
}

fn rate_status(e: &RateError) -> OrrwStatus {
    match e {
        RateError::TooManyEdges { .. } => OrrwStatus::UnsupportedSize,
        RateError::Kernel(KernelError::NonPositiveDelta(_)) => OrrwStatus::BadDelta,
        RateError::Kernel(_) => OrrwStatus::BadMeasure,
        RateError::Flow(FlowError::NotConverged { .. }) => OrrwStatus::NoConvergence,
        _ => OrrwStatus::Internal,
    }
}

fn exact_status(e: &ExactError) -> OrrwStatus {
    match e {
        ExactError::TooManyEdges(_) => OrrwStatus::UnsupportedSize,
        ExactError::CurveTooLong(_) => OrrwStatus::BadArgument,
        _ => OrrwStatus::Internal,
    }
}

fn sim_status(e: &SimError) -> OrrwStatus {
    match e {
        SimError::Kernel(KernelError::NonPositiveDelta(_)) => OrrwStatus::BadDelta,
        SimError::HorizonExceeded { .. } | SimError::NoSteps => OrrwStatus::BadArgument,
        _ => OrrwStatus::Internal,
    }
}

/// Build a graph from `n_edges` undirected edges `(tails[i], heads[i])` over
/// vertices `0..n_vertices`, started at `start`, and store a handle in
/// `*out`.  Fails with `ORRW_STATUS_INVALID_GRAPH` unless every vertex id is
/// below `n_vertices`, every vertex appears in some edge, and the edges form
/// a simple connected graph with 2 to 20 edges.
///
/// # Safety
///
/// `tails` and `heads` must point to `n_edges` readable elements and `out`
/// to a writable slot.  A handle stored in `*out` must be released with
/// [`orrw_graph_free`] exactly once.
#[no_mangle]
pub unsafe extern "C" fn orrw_graph_new(
    n_vertices: u32,
    tails: *const u32,
    heads: *const u32,
    n_edges: usize,
    start: u32,
    out: *mut *mut OrrwGraph,
) -> OrrwStatus {
    if tails.is_null() || heads.is_null() || out.is_null() {
        return OrrwStatus::NullArgument;
    }
    let tails = slice::from_raw_parts(tails, n_edges);
    let heads = slice::from_raw_parts(heads, n_edges);
    guard(|| {
        if start >= n_vertices
            || tails.iter().chain(heads).any(|&v| v >= n_vertices)
        {
            return OrrwStatus::InvalidGraph;
        }
        let pairs: Vec<(String, String)> = tails
            .iter()
            .zip(heads)
            .map(|(&t, &h)| (t.to_string(), h.to_string()))
            .collect();
        let g = match FiniteGraph::build(&pairs, &start.to_string()) {
            Ok(g) => g,
            Err(_) => return OrrwStatus::InvalidGraph,
        };
        if g.n_vertices() != n_vertices as usize {
            return OrrwStatus::InvalidGraph; // some declared vertex is unused
        }
        let to_internal: Vec<usize> = (0..n_vertices)
            .map(|i| {
                let label = i.to_string();
                (0..g.n_vertices())
                    .find(|&v| g.label(v) == label)
                    .expect("every declared vertex has a label")
            })
            .collect();
        // Safety: `out` was null-checked and is writable per the contract.
        unsafe {
            *out = Box::into_raw(Box::new(OrrwGraph { g, to_internal }));
        }
        OrrwStatus::Ok
    })
}

/// Release a handle from [`orrw_graph_new`].  NULL is a no-op.
///
/// # Safety
///
/// `g` must be NULL or a handle not yet freed; it must not be used again.
#[no_mangle]
pub unsafe extern "C" fn orrw_graph_free(g: *mut OrrwGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of vertices of the graph, or 0 if `g` is NULL.
///
/// # Safety
///
/// `g` must be NULL or a live handle from [`orrw_graph_new`].
#[no_mangle]
pub unsafe extern "C" fn orrw_graph_n_vertices(g: *const OrrwGraph) -> u32 {
    if g.is_null() {
        0
    } else {
        (*g).g.n_vertices() as u32
    }
}

/// Number of edges of the graph, or 0 if `g` is NULL.
///
/// # Safety
///
/// `g` must be NULL or a live handle from [`orrw_graph_new`].
#[no_mangle]
pub unsafe extern "C" fn orrw_graph_n_edges(g: *const OrrwGraph) -> u32 {
    if g.is_null() {
        0
    } else {
        (*g).g.n_edges() as u32
    }
}

/// Tail exponent of the edge cover time at reinforcement `delta`: the decay
/// rate `alpha_c` with `P(cover > n) = e^{-alpha_c n + o(n)}`.
///
/// # Safety
///
/// `g` must be a live handle from [`orrw_graph_new`] and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn orrw_alpha_c(
    g: *const OrrwGraph,
    delta: f64,
    out: *mut f64,
) -> OrrwStatus {
    if g.is_null() || out.is_null() {
        return OrrwStatus::NullArgument;
    }
    let h = &*g;
    guard(|| {
        if !delta_ok(delta) {
            return OrrwStatus::BadDelta;
        }
        match rate::alpha_c(&h.g, delta, &h.g.cover_family()) {
            Ok(alpha) => {
                // Safety: `out` was null-checked and is writable.
                unsafe { *out = alpha };
                OrrwStatus::Ok
            }
            Err(e) => rate_status(&e),
        }
    })
}

/// Large-deviation rate of the empirical vertex measure `nu` (length
/// `n_vertices`, caller numbering) at reinforcement `delta`.  Writes
/// `*is_finite`; `*value` is written only when the rate is finite (it is
/// `+inf` exactly when no stationary kernel has marginal `nu`).
///
/// # Safety
///
/// `g` must be a live handle, `nu` must point to `nu_len` readable doubles,
/// and `is_finite` / `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn orrw_rate_i(
    g: *const OrrwGraph,
    delta: f64,
    nu: *const f64,
    nu_len: usize,
    is_finite: *mut bool,
    value: *mut f64,
) -> OrrwStatus {
    if g.is_null() || nu.is_null() || is_finite.is_null() || value.is_null() {
        return OrrwStatus::NullArgument;
    }
    let h = &*g;
    let nu = slice::from_raw_parts(nu, nu_len);
    guard(|| {
        if !delta_ok(delta) {
            return OrrwStatus::BadDelta;
        }
        if nu_len != h.g.n_vertices() {
            return OrrwStatus::BadMeasure;
        }
        let mut w = vec![0.0; nu_len];
        for (i, &mass) in nu.iter().enumerate() {
            w[h.to_internal[i]] = mass;
        }
        let measure = match Measure::probability(w) {
            Ok(m) => m,
            Err(_) => return OrrwStatus::BadMeasure,
        };
        match rate::rate_i(&h.g, delta, &measure) {
            Ok(rv) => {
                // Safety: both outputs were null-checked and are writable.
                unsafe {
                    match rv.value.finite() {
                        Some(v) => {
                            *is_finite = true;
                            *value = v;
                        }
                        None => *is_finite = false,
                    }
                }
                OrrwStatus::Ok
            }
            Err(e) => rate_status(&e),
        }
    })
}

/// Exact survival curve of the edge cover time: writes `P(cover > n)` for
/// `n = 0..=n_max` into `out[0..n_max + 1]`.  Requires at most 16 edges.
///
/// # Safety
///
/// `g` must be a live handle and `out` must point to `n_max + 1` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn orrw_cover_survival(
    g: *const OrrwGraph,
    delta: f64,
    n_max: usize,
    out: *mut f64,
) -> OrrwStatus {
    if g.is_null() || out.is_null() {
        return OrrwStatus::NullArgument;
    }
    let h = &*g;
    let out = slice::from_raw_parts_mut(out, n_max + 1);
    guard(|| {
        if !delta_ok(delta) {
            return OrrwStatus::BadDelta;
        }
        let chain = match build_meta_chain(&h.g, delta, &h.g.cover_family()) {
            Ok(c) => c,
            Err(e) => return exact_status(&e),
        };
        let curve = match survival_curve(&chain, n_max) {
            Ok(c) => c,
            Err(e) => return exact_status(&e),
        };
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = curve.p(n);
        }
        OrrwStatus::Ok
    })
}

/// Simulate one walk on the RNG stream `(seed, sample)` for at most
/// `horizon` steps.  Writes the cover stopping time to `*steps` and whether
/// the graph was covered within the horizon to `*covered`; when `*covered`
/// is false, `*steps` is `horizon`.  Identical `(seed, sample)` pairs
/// reproduce the same walk.
///
/// # Safety
///
/// `g` must be a live handle and `steps` / `covered` must be writable.
#[no_mangle]
pub unsafe extern "C" fn orrw_simulate_cover_time(
    g: *const OrrwGraph,
    delta: f64,
    seed: u64,
    sample: u64,
    horizon: usize,
    steps: *mut usize,
    covered: *mut bool,
) -> OrrwStatus {
    if g.is_null() || steps.is_null() || covered.is_null() {
        return OrrwStatus::NullArgument;
    }
    let h = &*g;
    guard(|| {
        if !delta_ok(delta) {
            return OrrwStatus::BadDelta;
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(sample);
        let traj = match sim::run(&h.g, h.g.start(), delta, horizon, &mut rng) {
            Ok(t) => t,
            Err(e) => return sim_status(&e),
        };
        // Safety: both outputs were null-checked and are writable.
        unsafe {
            match sim::stopping_time(&traj, &h.g.cover_family()) {
                Some(n) => {
                    *steps = n;
                    *covered = true;
                }
                None => {
                    *steps = horizon;
                    *covered = false;
                }
            }
        }
        OrrwStatus::Ok
    })
}

/// Static name of a status code (`"ORRW_STATUS_OK"`, ...).  Never NULL;
/// unknown codes map to `"ORRW_STATUS_UNKNOWN"`.
#[no_mangle]
pub extern "C" fn orrw_status_name(status: i32) -> *const c_char {
    let name: &'static [u8] = match status {
        0 => b"ORRW_STATUS_OK\0",
        1 => b"ORRW_STATUS_NULL_ARGUMENT\0",
        2 => b"ORRW_STATUS_INVALID_GRAPH\0",
        3 => b"ORRW_STATUS_BAD_DELTA\0",
        4 => b"ORRW_STATUS_BAD_MEASURE\0",
        5 => b"ORRW_STATUS_UNSUPPORTED_SIZE\0",
        6 => b"ORRW_STATUS_NO_CONVERGENCE\0",
        7 => b"ORRW_STATUS_BAD_ARGUMENT\0",
        8 => b"ORRW_STATUS_INTERNAL\0",
        _ => b"ORRW_STATUS_UNKNOWN\0",
    };
    name.as_ptr() as *const c_char
}
