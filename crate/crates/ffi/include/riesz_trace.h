#ifndef RIESZ_TRACE_H
#define RIESZ_TRACE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>

typedef enum RtStatus {
  RT_STATUS_OK = 0,
  RT_STATUS_NULL_POINTER = 1,
  RT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The caller's output buffer is shorter than required.
   */
  RT_STATUS_BUFFER_TOO_SMALL = 3,
  RT_STATUS_PARSE = 4,
  RT_STATUS_INVALID_MESH = 5,
  /**
   * A factorization, consistency or spectral check failed.
   */
  RT_STATUS_NUMERICAL = 6,
  RT_STATUS_IO = 7,
  RT_STATUS_PANIC = 8,
} RtStatus;

typedef enum RtDomain {
  RT_DOMAIN_UNIT_SQUARE = 0,
  RT_DOMAIN_L_SHAPE = 1,
} RtDomain;

/**
 * Triangulated domain.
 */
typedef struct RtMesh RtMesh;

/**
 * Operators, spectrum and Riesz bases built on one mesh.
 */
typedef struct RtPipeline RtPipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next `rt_*` call on the same thread.
 */
const char *rt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rt_version(void);

/**
 * Structured triangulation with `n` cells per unit length.
 *
 * # Safety
 * `domain` must be one of the `RtDomain` values and `out` valid for writes.
 * On success `*out` owns a mesh to be released with [`rt_mesh_free`].
 */
enum RtStatus rt_mesh_generate(enum RtDomain domain, size_t n, struct RtMesh **out);

/**
 * Reads and validates a mesh file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum RtStatus rt_mesh_load(const char *path, struct RtMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from this library not yet freed.
 */
void rt_mesh_free(struct RtMesh *mesh);

/**
 * Node, triangle and boundary-node counts. Any output pointer may be null.
 *
 * # Safety
 * `mesh` must be a live handle; non-null outputs must be valid for writes.
 */
enum RtStatus rt_mesh_counts(const struct RtMesh *mesh,
                             size_t *nodes,
                             size_t *triangles,
                             size_t *boundary_nodes);

/**
 * Assembles the operators, diagonalizes the core operator and builds both
 * bases. `rank_tol` must lie in `(0, 1e-4]`.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for writes. On success
 * `*out` must be released with [`rt_pipeline_free`].
 */
enum RtStatus rt_pipeline_build(const struct RtMesh *mesh,
                                double rank_tol,
                                struct RtPipeline **out);

/**
 * # Safety
 * `pipeline` must be null or a handle from this library not yet freed.
 */
void rt_pipeline_free(struct RtPipeline *pipeline);

/**
 * Number of modes, equal to the number of boundary nodes.
 *
 * # Safety
 * `pipeline` must be a live handle and `count` valid for writes.
 */
enum RtStatus rt_pipeline_mode_count(const struct RtPipeline *pipeline, size_t *count);

/**
 * Copies the singular values `κₙ` (nonincreasing) into `out[0..mode_count]`.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum RtStatus rt_pipeline_kappa(const struct RtPipeline *pipeline, double *out, size_t len);

/**
 * Very weak solution for boundary values `g` (one per boundary node, in
 * boundary-node order) from the first `truncation` terms of the expansion,
 * or all of them when `truncation` is 0. Writes nodal values to
 * `field[0..num_nodes]` and, if non-null, the `H_{1/2}` norm of the
 * truncated solution to `h_half_norm`.
 *
 * # Safety
 * `g` must be valid for `g_len` reads, `field` for `field_len` writes and
 * `h_half_norm` null or valid for a write.
 */
enum RtStatus rt_pipeline_very_weak_solve(const struct RtPipeline *pipeline,
                                          const double *g,
                                          size_t g_len,
                                          size_t truncation,
                                          double *field,
                                          size_t field_len,
                                          double *h_half_norm);

/**
 * Optimal Riesz bounds `a_G, b_G` of `(gₙ)` and `a_Y, b_Y` of `(yₙ)` in
 * `L²(∂Ω)`. Any output pointer may be null.
 *
 * # Safety
 * `pipeline` must be a live handle; non-null outputs must be valid for writes.
 */
enum RtStatus rt_pipeline_riesz_bounds(const struct RtPipeline *pipeline,
                                       double *a_g,
                                       double *b_g,
                                       double *a_y,
                                       double *b_y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIESZ_TRACE_H */
