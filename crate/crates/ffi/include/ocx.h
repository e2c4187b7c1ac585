#ifndef OCX_H
#define OCX_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum OcxStatus {
  OCX_STATUS_OK = 0,
  OCX_STATUS_NULL_POINTER = 1,
  OCX_STATUS_INVALID_PARAMETER = 2,
  OCX_STATUS_SHAPE_MISMATCH = 3,
  OCX_STATUS_NUMERICAL = 4,
  OCX_STATUS_PARSE = 5,
  OCX_STATUS_IO = 6,
  OCX_STATUS_PANIC = 7,
} OcxStatus;

// Opaque trained model.
typedef struct OcxModel OcxModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Trains with the exponential kernel `exp(-d^q / (q sigma^q))` on `n`
// row-major samples of dimension `d`.
//
// # Safety
// `data` must point to `n * d` doubles and `out` to writable storage.
enum OcxStatus ocx_train_exponential(const double *data,
                                     size_t n,
                                     size_t d,
                                     double q,
                                     double sigma,
                                     double nu,
                                     double tol,
                                     uint64_t max_iter,
                                     struct OcxModel **out);

// Trains with the t-Student kernel `1 / (a + d^q)`.
//
// # Safety
// As for `ocx_train_exponential`.
enum OcxStatus ocx_train_tstudent(const double *data,
                                  size_t n,
                                  size_t d,
                                  double q,
                                  double a,
                                  double nu,
                                  double tol,
                                  uint64_t max_iter,
                                  struct OcxModel **out);

// Loads a model from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable.
enum OcxStatus ocx_model_from_json(const char *json, struct OcxModel **out);

// Serialises a model to JSON. Release the string with `ocx_string_free`.
//
// # Safety
// `model` must come from this library and `out` be writable.
enum OcxStatus ocx_model_to_json(const struct OcxModel *model, char **out);

// # Safety
// `s` must be null or come from `ocx_model_to_json`.
void ocx_string_free(char *s);

// # Safety
// `model` must be null or a live handle; it is invalid afterwards.
void ocx_model_free(struct OcxModel *model);

// Input dimension, 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t ocx_model_dim(const struct OcxModel *model);

// Number of support vectors, 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t ocx_model_num_sv(const struct OcxModel *model);

// Offset of the decision function, NaN for a null handle.
//
// # Safety
// `model` must be null or a live handle.
double ocx_model_rho(const struct OcxModel *model);

// `g(x) = Σ_j α_j k(x, u_j)`.
//
// # Safety
// `x` must point to `d` doubles and `out` to one.
enum OcxStatus ocx_inlierness(const struct OcxModel *model, const double *x, size_t d, double *out);

// Outlierness `o(x)` of the model's kernel family.
//
// # Safety
// `x` must point to `d` doubles and `out` to one.
enum OcxStatus ocx_outlierness(const struct OcxModel *model,
                               const double *x,
                               size_t d,
                               double *out);

// Relevance of each input variable for the outlierness. Writes `d` values
// to `relevance` and their sum to `total` (which may be null).
//
// # Safety
// `x` and `relevance` must each point to `d` doubles.
enum OcxStatus ocx_explain_outlier(const struct OcxModel *model,
                                   const double *x,
                                   size_t d,
                                   double *relevance,
                                   double *total);

// Relevance of each support vector for the inlierness. Writes
// `ocx_model_num_sv` values, `m` must equal that count.
//
// # Safety
// `x` must point to `d` doubles and `relevance` to `m`.
enum OcxStatus ocx_explain_inlier(const struct OcxModel *model,
                                  const double *x,
                                  size_t d,
                                  double *relevance,
                                  size_t m);

// Message of the last failed call on this thread, empty after a success.
const char *ocx_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCX_H */
