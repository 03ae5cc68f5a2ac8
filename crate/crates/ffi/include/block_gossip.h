#ifndef BLOCK_GOSSIP_H
#define BLOCK_GOSSIP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BgStatus {
  BG_STATUS_OK = 0,
  BG_STATUS_NULL_POINTER = 1,
  BG_STATUS_INVALID_PARAMETER = 2,
  BG_STATUS_INVALID_GRAPH = 3,
  BG_STATUS_DISCONNECTED = 4,
  BG_STATUS_INVALID_COVERING = 5,
  BG_STATUS_DIMENSION_MISMATCH = 6,
  BG_STATUS_NUMERICAL = 7,
  BG_STATUS_IO = 8,
  BG_STATUS_PARSE = 9,
  BG_STATUS_PANIC = 10,
} BgStatus;

/**
 * Edge noise model for [`bg_gossip_run`].
 */
typedef enum BgNoiseKind {
  BG_NOISE_KIND_CONSISTENT = 0,
  /**
   * `noise` holds the fixed per-edge error `m`.
   */
  BG_NOISE_KIND_CONSTANT_EDGE = 1,
  /**
   * `noise` holds per-edge standard deviations.
   */
  BG_NOISE_KIND_VARYING_EDGE = 2,
} BgNoiseKind;

/**
 * Opaque row covering handle.
 */
typedef struct BgCovering BgCovering;

/**
 * Opaque graph handle.
 */
typedef struct BgGraph BgGraph;

/**
 * Covering constants `(d, α, β, r, R, M)`.
 */
typedef struct BgConstants {
  size_t block_count;
  double alpha;
  double beta;
  size_t min_multiplicity;
  size_t max_multiplicity;
  size_t max_block_size;
} BgConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *bg_last_error(void);

/**
 * Seeded Erdős–Rényi graph `G(n, p)`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BgStatus bg_graph_erdos_renyi(size_t n, double p, uint64_t seed, struct BgGraph **out);

/**
 * `rows × cols` grid graph.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BgStatus bg_graph_lattice(size_t rows, size_t cols, struct BgGraph **out);

/**
 * Complete graph `K_n`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BgStatus bg_graph_complete(size_t n, struct BgGraph **out);

/**
 * Path graph `P_n`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum BgStatus bg_graph_path(size_t n, struct BgGraph **out);

/**
 * Graph from `edge_count` node pairs stored as `endpoints[2k], endpoints[2k+1]`.
 *
 * # Safety
 * `endpoints` must point to `2 * edge_count` readable values and `out` to
 * writable storage for one handle.
 */
enum BgStatus bg_graph_from_edges(size_t node_count,
                                  const size_t *endpoints,
                                  size_t edge_count,
                                  struct BgGraph **out);

/**
 * Reads an edge-list file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one handle.
 */
enum BgStatus bg_graph_load(const char *path, struct BgGraph **out);

/**
 * Writes an edge-list file.
 *
 * # Safety
 * `graph` must be a live handle and `path` a NUL-terminated string.
 */
enum BgStatus bg_graph_save(const struct BgGraph *graph, const char *path);

/**
 * Releases a graph; null is ignored.
 *
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void bg_graph_free(struct BgGraph *graph);

/**
 * Node count, or 0 for null.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t bg_graph_node_count(const struct BgGraph *graph);

/**
 * Edge count, or 0 for null.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t bg_graph_edge_count(const struct BgGraph *graph);

/**
 * Second-smallest Laplacian eigenvalue of a connected graph.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for one `double`.
 */
enum BgStatus bg_graph_algebraic_connectivity(const struct BgGraph *graph, double *out);

/**
 * Greedy partition into independent edge sets.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for one handle.
 */
enum BgStatus bg_covering_ies(const struct BgGraph *graph, struct BgCovering **out);

/**
 * Greedy partition into cliques.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for one handle.
 */
enum BgStatus bg_covering_clique(const struct BgGraph *graph, struct BgCovering **out);

/**
 * `count` random simple paths of up to `length` edges, patched to cover
 * every edge.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for one handle.
 */
enum BgStatus bg_covering_random_paths(const struct BgGraph *graph,
                                       size_t length,
                                       size_t count,
                                       uint64_t seed,
                                       struct BgCovering **out);

/**
 * `count` random edge sets of `size` edges, patched to cover every edge.
 *
 * # Safety
 * `graph` must be a live handle and `out` valid for one handle.
 */
enum BgStatus bg_covering_random_blocks(const struct BgGraph *graph,
                                        size_t size,
                                        size_t count,
                                        uint64_t seed,
                                        struct BgCovering **out);

/**
 * Covering of `row_count` rows from `block_count` blocks. Block `k` holds
 * `ids[offsets[k] .. offsets[k + 1]]`, so `offsets` has `block_count + 1`
 * entries.
 *
 * # Safety
 * `offsets` must point to `block_count + 1` values and `ids` to
 * `offsets[block_count]` values; `out` must be valid for one handle.
 */
enum BgStatus bg_covering_from_blocks(size_t row_count,
                                      const size_t *offsets,
                                      size_t block_count,
                                      const size_t *ids,
                                      struct BgCovering **out);

/**
 * Reads a covering file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one handle.
 */
enum BgStatus bg_covering_load(const char *path, struct BgCovering **out);

/**
 * Writes a covering file.
 *
 * # Safety
 * `c` must be a live handle and `path` a NUL-terminated string.
 */
enum BgStatus bg_covering_save(const struct BgCovering *c, const char *path);

/**
 * Releases a covering; null is ignored.
 *
 * # Safety
 * `c` must be null or a handle not yet freed.
 */
void bg_covering_free(struct BgCovering *c);

/**
 * Number of blocks, or 0 for null.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t bg_covering_block_count(const struct BgCovering *c);

/**
 * Constants of a covering of `graph`'s edges.
 *
 * # Safety
 * `c` and `graph` must be live handles and `out` valid for one struct.
 */
enum BgStatus bg_covering_constants(const struct BgCovering *c,
                                    const struct BgGraph *graph,
                                    struct BgConstants *out);

/**
 * Expected per-iteration contraction `1 − r·α(G)/(β·d)` of the squared
 * gossip error.
 *
 * # Safety
 * `c` and `graph` must be live handles and `out` valid for one `double`.
 */
enum BgStatus bg_gossip_rate_bound(const struct BgCovering *c,
                                   const struct BgGraph *graph,
                                   double *out);

/**
 * Runs `iterations` block gossip steps from `values` (length node count)
 * and writes `‖c_k − c*‖` for `k = 0 … iterations` into `errors`. When
 * `final_values` is non-null it receives `c_iterations`. `noise` holds one
 * value per edge and may be null for [`BgNoiseKind::Consistent`].
 *
 * # Safety
 * Handles must be live; `values` and (if non-null) `final_values` must
 * hold node-count entries, `noise` edge-count entries, and `errors`
 * `iterations + 1` entries.
 */
enum BgStatus bg_gossip_run(const struct BgGraph *graph,
                            const struct BgCovering *c,
                            const double *values,
                            enum BgNoiseKind noise_kind,
                            const double *noise,
                            size_t iterations,
                            uint64_t seed,
                            double *errors,
                            double *final_values);

/**
 * Block Kaczmarz on `A x = b` with `A` given row-major (`rows × cols`) and
 * a covering of its rows. Writes `‖x_k − x*‖` for `k = 0 … iterations` into
 * `errors` (may be null) and the final iterate into `x_out`, where
 * `x* = (I − A†A)x₀ + A†b̂` and `b̂` is the projection of `b` onto the
 * range of `A`.
 *
 * # Safety
 * `a` must hold `rows * cols` entries, `b` `rows`, `x0` and `x_out`
 * `cols`, and `errors` (if non-null) `iterations + 1`; `c` must be live.
 */
enum BgStatus bg_kaczmarz_run(const double *a,
                              size_t rows,
                              size_t cols,
                              const double *b,
                              const double *x0,
                              const struct BgCovering *c,
                              size_t iterations,
                              uint64_t seed,
                              double *x_out,
                              double *errors);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOCK_GOSSIP_H */
