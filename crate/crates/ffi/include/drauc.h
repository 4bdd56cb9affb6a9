#ifndef DRAUC_H
#define DRAUC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum DraucStatus {
  DRAUC_STATUS_OK = 0,
  DRAUC_STATUS_NULL_POINTER = 1,
  DRAUC_STATUS_INVALID_ARGUMENT = 2,
  DRAUC_STATUS_DIMENSION_MISMATCH = 3,
  DRAUC_STATUS_EMPTY_CLASS = 4,
  DRAUC_STATUS_SOLVER_FAILURE = 5,
  DRAUC_STATUS_IO = 6,
  DRAUC_STATUS_PARSE = 7,
  DRAUC_STATUS_CONFIG = 8,
  DRAUC_STATUS_PANIC = 9,
} DraucStatus;

typedef enum DraucModelKind {
  DRAUC_MODEL_KIND_SVM = 0,
  DRAUC_MODEL_KIND_D_AUC = 1,
  DRAUC_MODEL_KIND_DR_AUC_F = 2,
  DRAUC_MODEL_KIND_DR_AUC_V = 3,
} DraucModelKind;

typedef enum DraucTiePolicy {
  DRAUC_TIE_POLICY_COUNT_AS_SUCCESS = 0,
  DRAUC_TIE_POLICY_HALF_CREDIT = 1,
} DraucTiePolicy;

/**
 * Labeled feature matrix.
 */
typedef struct DraucDataset DraucDataset;

/**
 * Trained model together with its standardizer.
 */
typedef struct DraucModel DraucModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *drauc_last_error(void);

/**
 * Builds a dataset from a row-major `n x d` matrix and `n` labels in
 * `{1, -1}`.
 *
 * # Safety
 * `features` must point to `n * d` doubles and `labels` to `n` bytes.
 */
enum DraucStatus drauc_dataset_new(const double *features,
                                   size_t n,
                                   size_t d,
                                   const int8_t *labels,
                                   struct DraucDataset **out);

/**
 * Loads a CSV file with a header row.
 *
 * # Safety
 * String arguments must be NUL-terminated.
 */
enum DraucStatus drauc_dataset_load_csv(const char *path,
                                        const char *label_column,
                                        const char *positive_label,
                                        struct DraucDataset **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t drauc_dataset_len(const struct DraucDataset *ds);

/**
 * Number of features, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t drauc_dataset_dim(const struct DraucDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void drauc_dataset_free(struct DraucDataset *ds);

/**
 * Trains a model with default solver settings. `kind` is a
 * [`DraucModelKind`] value. `epsilon` must be 0 for the
 * non-robust kinds.
 *
 * # Safety
 * `ds` must be a live dataset handle and `out` writable.
 */
enum DraucStatus drauc_model_train(const struct DraucDataset *ds,
                                   int32_t kind,
                                   double c,
                                   double epsilon,
                                   bool standardize,
                                   struct DraucModel **out);

/**
 * Score of one raw feature vector of length `d`.
 *
 * # Safety
 * `x` must point to `d` doubles.
 */
enum DraucStatus drauc_model_score(const struct DraucModel *model,
                                   const double *x,
                                   size_t d,
                                   double *out);

/**
 * AUC of the model on a dataset.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum DraucStatus drauc_model_auc(const struct DraucModel *model,
                                 const struct DraucDataset *ds,
                                 int32_t policy,
                                 double *out);

/**
 * Copies up to `len` weights into `buf` and stores the model dimension in
 * `dim`. Pass a null `buf` to query the dimension only.
 *
 * # Safety
 * `buf` must be null or hold `len` doubles; `dim` must be writable.
 */
enum DraucStatus drauc_model_weights(const struct DraucModel *model,
                                     double *buf,
                                     size_t len,
                                     size_t *dim);

/**
 * Intercept of the model (0 except for the SVM).
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
enum DraucStatus drauc_model_intercept(const struct DraucModel *model, double *out);

/**
 * Serializes the model to JSON; release the string with
 * [`drauc_string_free`].
 *
 * # Safety
 * `model` must be live and `out` writable.
 */
enum DraucStatus drauc_model_to_json(const struct DraucModel *model, char **out);

/**
 * Reads a model from JSON produced by [`drauc_model_to_json`] or the CLI.
 *
 * # Safety
 * `json` must be NUL-terminated and `out` writable.
 */
enum DraucStatus drauc_model_from_json(const char *json, struct DraucModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void drauc_model_free(struct DraucModel *model);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void drauc_string_free(char *s);

/**
 * AUC of raw scores against labels in `{1, -1}`.
 *
 * # Safety
 * `scores` and `labels` must each hold `n` elements.
 */
enum DraucStatus drauc_auc(const double *scores,
                           const int8_t *labels,
                           size_t n,
                           int32_t policy,
                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRAUC_H */
