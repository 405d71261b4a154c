/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TORIFOLD_H
#define TORIFOLD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every call.
 */
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  /*
   The analysis ran and its verdict is negative; the result is still written.
   */
  TF_STATUS_NEGATIVE = 1,
  TF_STATUS_INPUT_ERROR = 2,
  TF_STATUS_NUMERICAL_ERROR = 3,
  TF_STATUS_NULL_POINTER = 4,
  TF_STATUS_PANIC = 5,
} TfStatus;

/*
 A validated simplicial mesh.
 */
typedef struct TfMesh TfMesh;

/*
 A parsed Poisson system with its first integrals.
 */
typedef struct TfSystem TfSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null after a successful call.
 The pointer stays valid until the next call on the same thread.
 */
const char *tf_last_error(void);

/*
 Library version as a static string.
 */
const char *tf_version(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and must not be used afterwards.
 */
void tf_string_free(char *s);

/*
 Parses a mesh document.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TfStatus tf_mesh_from_json(const char *json, struct TfMesh **out);

/*
 Loads a bundled mesh such as `torus8`, `klein8` or `octahedron`.

 # Safety
 `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TfStatus tf_mesh_builtin(const char *name, struct TfMesh **out);

/*
 # Safety
 `mesh` must come from this library or be null, and must not be used afterwards.
 */
void tf_mesh_free(struct TfMesh *mesh);

/*
 Vertex count and dimension of a mesh.

 # Safety
 All pointers must be valid.
 */
enum TfStatus tf_mesh_shape(const struct TfMesh *mesh, size_t *vertices, size_t *dimension);

/*
 First Betti number over the rationals.

 # Safety
 `mesh` and `out` must be valid.
 */
enum TfStatus tf_mesh_betti(const struct TfMesh *mesh, size_t *out);

/*
 Betti number, selected cycles, integral basis and its period matrix as JSON.

 # Safety
 `mesh` and `out_json` must be valid.
 */
enum TfStatus tf_mesh_cohomology(const struct TfMesh *mesh, char **out_json);

/*
 Builds and certifies the torus-valued map for `count` cochain documents.
 Writes the full outcome as JSON; returns `Negative` when the verdict is not a
 fibration or covering.

 # Safety
 `forms` must point to `count` NUL-terminated strings; `mesh` and `out_json` must be valid.
 */
enum TfStatus tf_fibrate(const struct TfMesh *mesh,
                         const char *const *forms,
                         size_t count,
                         double eps,
                         size_t bins,
                         char **out_json);

/*
 Parses a system definition.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TfStatus tf_system_from_json(const char *json, struct TfSystem **out);

/*
 Loads a bundled system such as `oscillator` or `so3`.

 # Safety
 `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TfStatus tf_system_builtin(const char *name, struct TfSystem **out);

/*
 # Safety
 `system` must come from this library or be null, and must not be used afterwards.
 */
void tf_system_free(struct TfSystem *system);

/*
 Phase-space dimension and number of first integrals.

 # Safety
 All pointers must be valid.
 */
enum TfStatus tf_system_shape(const struct TfSystem *system, size_t *dimension, size_t *integrals);

/*
 Poisson bracket `{f_i, f_j}` of two integrals at `x`.

 # Safety
 `x` must point to `len` doubles; `system` and `out` must be valid.
 */
enum TfStatus tf_system_bracket(const struct TfSystem *system,
                                size_t i,
                                size_t j,
                                const double *x,
                                size_t len,
                                double *out);

/*
 Runs the integrability classification; returns `Negative` for "not integrable".

 # Safety
 `system` and `out_json` must be valid.
 */
enum TfStatus tf_system_classify(const struct TfSystem *system,
                                 size_t samples,
                                 uint64_t seed,
                                 char **out_json);

/*
 Certifies the fibre through `level`, starting the projection from `guess`.
 Returns `Negative` when the verdict is inconclusive.

 # Safety
 `level` must point to `level_len` doubles and `guess` to `guess_len` doubles;
 `system` and `out_json` must be valid.
 */
enum TfStatus tf_detect_torus(const struct TfSystem *system,
                              const double *level,
                              size_t level_len,
                              const double *guess,
                              size_t guess_len,
                              char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORIFOLD_H */
