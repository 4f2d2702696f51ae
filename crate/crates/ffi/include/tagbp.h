/* C interface to the tagbp graph-inference engine. */

#ifndef TAGBP_H
#define TAGBP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every C entry point.
 */
typedef enum TagbpStatus {
  TAGBP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TAGBP_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments were readable but inconsistent (bad counts, bad ranges).
   */
  TAGBP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The edge list or labels violate graph constraints.
   */
  TAGBP_STATUS_GRAPH = 3,
  /**
   * Inference failed (missing embeddings/anchors, numeric failure).
   */
  TAGBP_STATUS_INFERENCE = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  TAGBP_STATUS_PANIC = 5,
} TagbpStatus;

/**
 * Inference method selector for [`tagbp_task_infer`].
 */
typedef enum TagbpMethod {
  /**
   * Softmax over anchor cosines, no structure.
   */
  TAGBP_METHOD_RAW = 0,
  /**
   * Same potentials on neighborhood-averaged embeddings.
   */
  TAGBP_METHOD_NA = 1,
  /**
   * Full loopy belief propagation.
   */
  TAGBP_METHOD_BP = 2,
  /**
   * One-shot linearized propagation.
   */
  TAGBP_METHOD_BP_APPROX = 3,
} TagbpMethod;

/**
 * Opaque inference task: a graph plus optional embeddings, anchors and
 * labels. Create with [`tagbp_task_new`], destroy with
 * [`tagbp_task_free`].
 */
typedef struct TagbpTask TagbpTask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying engine as a static NUL-terminated string.
 * The pointer is valid for the lifetime of the process; do not free it.
 */
const char *tagbp_version(void);

/**
 * Message for the most recent failure on the calling thread, or null if
 * no failure has been recorded. The pointer stays valid until the next
 * failing tagbp call on this thread; do not free it.
 */
const char *tagbp_last_error_message(void);

/**
 * Builds a task over an undirected graph.
 *
 * `edge_endpoints` holds `2 * edge_count` node ids as (a, b) pairs;
 * self-loops and duplicate pairs are dropped. On success writes the new
 * handle to `out_task` and returns `Ok`.
 *
 * # Safety
 * `edge_endpoints` must point to `2 * edge_count` readable `uint64_t`
 * values (it may be null only when `edge_count` is 0), and `out_task`
 * must be a valid location to write one pointer.
 */
enum TagbpStatus tagbp_task_new(uint64_t node_count,
                                uint64_t class_count,
                                const uint64_t *edge_endpoints,
                                uint64_t edge_count,
                                struct TagbpTask **out_task);

/**
 * Attaches row-major node embeddings (`rows` × `dim`, one row per node).
 *
 * # Safety
 * `task` must be a live handle from [`tagbp_task_new`] and `values`
 * must point to `rows * dim` readable doubles.
 */
enum TagbpStatus tagbp_task_set_embeddings(struct TagbpTask *task,
                                           uint64_t rows,
                                           uint64_t dim,
                                           const double *values);

/**
 * Attaches row-major class anchors (`classes` × `dim`); `classes` must
 * equal the task's class count and `dim` the embedding dimension.
 *
 * # Safety
 * `task` must be a live handle and `values` must point to
 * `classes * dim` readable doubles.
 */
enum TagbpStatus tagbp_task_set_anchors(struct TagbpTask *task,
                                        uint64_t classes,
                                        uint64_t dim,
                                        const double *values);

/**
 * Attaches one ground-truth label per node (each `< class_count`),
 * enabling [`tagbp_task_exact_homophily`].
 *
 * # Safety
 * `task` must be a live handle and `labels` must point to `len`
 * readable `uint64_t` values.
 */
enum TagbpStatus tagbp_task_set_labels(struct TagbpTask *task,
                                       const uint64_t *labels,
                                       uint64_t len);

/**
 * Fraction of edges whose endpoints share a label. Requires labels.
 *
 * # Safety
 * `task` must be a live handle and `out_ratio` a valid location for one
 * double.
 */
enum TagbpStatus tagbp_task_exact_homophily(const struct TagbpTask *task, double *out_ratio);

/**
 * Runs inference and writes the results.
 *
 * `homophily_ratio` parameterizes the edge potential for `BP` and
 * `BP_APPROX` (ignored by `RAW` and `NA`). Zero `tau`, `iterations`,
 * `damping` or `aggregation_layers` select the method defaults (τ 0.025
 * for full propagation and 0.01 for the approximation, 5 rounds,
 * no damping, 1 aggregation layer). `out_log_beliefs` (length
 * `node_count * class_count`, row-major) and `out_predictions` (length
 * `node_count`) may each be null when not wanted.
 *
 * # Safety
 * `task` must be a live handle with embeddings and anchors attached;
 * each non-null output pointer must reference writable memory of the
 * length documented above.
 */
enum TagbpStatus tagbp_task_infer(const struct TagbpTask *task,
                                  enum TagbpMethod method,
                                  double homophily_ratio,
                                  double tau,
                                  uint64_t iterations,
                                  double damping,
                                  uint64_t aggregation_layers,
                                  double *out_log_beliefs,
                                  uint64_t *out_predictions);

/**
 * Destroys a task handle. Null is ignored; a handle must not be used
 * after this call.
 *
 * # Safety
 * `task` must be null or a handle from [`tagbp_task_new`] that has not
 * already been freed.
 */
void tagbp_task_free(struct TagbpTask *task);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAGBP_H */
