/* C interface to the orrw once-reinforced random walk laboratory. */

#ifndef ORRW_H
#define ORRW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every function in this library.
enum OrrwStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  // Success; all output pointers were written.
  ORRW_STATUS_OK = 0,
  // A required pointer argument was NULL.
  ORRW_STATUS_NULL_ARGUMENT = 1,
  // The edge list does not describe a simple connected graph on the
  // declared vertices (2..=20 edges, every vertex used, start in range).
  ORRW_STATUS_INVALID_GRAPH = 2,
  // The reinforcement factor was not a positive finite number.
  ORRW_STATUS_BAD_DELTA = 3,
  // The measure has the wrong length, a negative entry, or mass != 1.
  ORRW_STATUS_BAD_MEASURE = 4,
  // The graph is too large for this operation's exact engine.
  ORRW_STATUS_UNSUPPORTED_SIZE = 5,
  // The variational solver exhausted its iteration budget.
  ORRW_STATUS_NO_CONVERGENCE = 6,
  // A scalar argument was out of range (zero horizon, horizon above the
  // per-sample cap, ...).
  ORRW_STATUS_BAD_ARGUMENT = 7,
  // Unexpected internal failure (a bug; includes caught panics).
  ORRW_STATUS_INTERNAL = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum OrrwStatus OrrwStatus;
#else
typedef int32_t OrrwStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque handle to an immutable graph with a distinguished start vertex.
typedef struct OrrwGraph OrrwGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Build a graph from `n_edges` undirected edges `(tails[i], heads[i])` over
// vertices `0..n_vertices`, started at `start`, and store a handle in
// `*out`.  Fails with `ORRW_STATUS_INVALID_GRAPH` unless every vertex id is
// below `n_vertices`, every vertex appears in some edge, and the edges form
// a simple connected graph with 2 to 20 edges.
//
// # Safety
//
// `tails` and `heads` must point to `n_edges` readable elements and `out`
// to a writable slot.  A handle stored in `*out` must be released with
// [`orrw_graph_free`] exactly once.
OrrwStatus orrw_graph_new(uint32_t n_vertices,
                          const uint32_t *tails,
                          const uint32_t *heads,
                          size_t n_edges,
                          uint32_t start,
                          struct OrrwGraph **out);

// Release a handle from [`orrw_graph_new`].  NULL is a no-op.
//
// # Safety
//
// `g` must be NULL or a handle not yet freed; it must not be used again.
void orrw_graph_free(struct OrrwGraph *g);

// Number of vertices of the graph, or 0 if `g` is NULL.
//
// # Safety
//
// `g` must be NULL or a live handle from [`orrw_graph_new`].
uint32_t orrw_graph_n_vertices(const struct OrrwGraph *g);

// Number of edges of the graph, or 0 if `g` is NULL.
//
// # Safety
//
// `g` must be NULL or a live handle from [`orrw_graph_new`].
uint32_t orrw_graph_n_edges(const struct OrrwGraph *g);

// Tail exponent of the edge cover time at reinforcement `delta`: the decay
// rate `alpha_c` with `P(cover > n) = e^{-alpha_c n + o(n)}`.
//
// # Safety
//
// `g` must be a live handle from [`orrw_graph_new`] and `out` writable.
OrrwStatus orrw_alpha_c(const struct OrrwGraph *g, double delta, double *out);

// Large-deviation rate of the empirical vertex measure `nu` (length
// `n_vertices`, caller numbering) at reinforcement `delta`.  Writes
// `*is_finite`; `*value` is written only when the rate is finite (it is
// `+inf` exactly when no stationary kernel has marginal `nu`).
//
// # Safety
//
// `g` must be a live handle, `nu` must point to `nu_len` readable doubles,
// and `is_finite` / `value` must be writable.
OrrwStatus orrw_rate_i(const struct OrrwGraph *g,
                       double delta,
                       const double *nu,
                       size_t nu_len,
                       bool *is_finite,
                       double *value);

// Exact survival curve of the edge cover time: writes `P(cover > n)` for
// `n = 0..=n_max` into `out[0..n_max + 1]`.  Requires at most 16 edges.
//
// # Safety
//
// `g` must be a live handle and `out` must point to `n_max + 1` writable
// doubles.
OrrwStatus orrw_cover_survival(const struct OrrwGraph *g, double delta, size_t n_max, double *out);

// Simulate one walk on the RNG stream `(seed, sample)` for at most
// `horizon` steps.  Writes the cover stopping time to `*steps` and whether
// the graph was covered within the horizon to `*covered`; when `*covered`
// is false, `*steps` is `horizon`.  Identical `(seed, sample)` pairs
// reproduce the same walk.
//
// # Safety
//
// `g` must be a live handle and `steps` / `covered` must be writable.
OrrwStatus orrw_simulate_cover_time(const struct OrrwGraph *g,
                                    double delta,
                                    uint64_t seed,
                                    uint64_t sample,
                                    size_t horizon,
                                    size_t *steps,
                                    bool *covered);

// Static name of a status code (`"ORRW_STATUS_OK"`, ...).  Never NULL;
// unknown codes map to `"ORRW_STATUS_UNKNOWN"`.
const char *orrw_status_name(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORRW_H */
