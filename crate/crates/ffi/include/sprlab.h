#ifndef SPRLAB_H
#define SPRLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>

/**
 * Result of every fallible call.
 */
typedef enum SprlabStatus {
  SPRLAB_STATUS_OK = 0,
  SPRLAB_STATUS_NULL_POINTER = 1,
  SPRLAB_STATUS_INVALID_ARGUMENT = 2,
  SPRLAB_STATUS_IO = 3,
  SPRLAB_STATUS_PARSE = 4,
  SPRLAB_STATUS_INFEASIBLE = 5,
  SPRLAB_STATUS_DEGENERATE = 6,
  SPRLAB_STATUS_INTERNAL = 7,
} SprlabStatus;

/**
 * A validated network case.
 */
typedef struct SprlabCase SprlabCase;

/**
 * A trained one-vs-one price classifier.
 */
typedef struct SprlabModel SprlabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads and validates a case file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SprlabStatus sprlab_case_load(const char *path, struct SprlabCase **out);

/**
 * Parses and validates a case from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SprlabStatus sprlab_case_from_json(const char *json, struct SprlabCase **out);

/**
 * Releases a case; null is ignored.
 *
 * # Safety
 * `case` must come from a `sprlab_case_*` constructor and not be used afterwards.
 */
void sprlab_case_free(struct SprlabCase *case_);

/**
 * Number of buses, or 0 for a null handle.
 *
 * # Safety
 * `case` must be null or a live handle.
 */
size_t sprlab_case_num_buses(const struct SprlabCase *case_);

/**
 * Number of buses whose load is a parameter, or 0 for a null handle.
 *
 * # Safety
 * `case` must be null or a live handle.
 */
size_t sprlab_case_num_load_buses(const struct SprlabCase *case_);

/**
 * Solves one dispatch and writes the price at every bus.
 *
 * `loads` holds either one value per bus or one per load bus. Line ratings
 * are scaled by `1 + xi`. `lmp_out` must hold `sprlab_case_num_buses` values.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum SprlabStatus sprlab_solve_lmp(const struct SprlabCase *case_,
                                   const double *loads,
                                   size_t n_loads,
                                   double xi,
                                   double *lmp_out,
                                   size_t lmp_len);

/**
 * Enumerates every price region inside the box `[lower, upper]` (one bound
 * per load bus) and returns the regions as JSON in `*json_out`.
 *
 * # Safety
 * Pointers must be valid for `dim` values; `json_out` must be writable.
 * The returned string must be released with `sprlab_string_free`.
 */
enum SprlabStatus sprlab_enumerate_json(const struct SprlabCase *case_,
                                        const double *lower,
                                        const double *upper,
                                        size_t dim,
                                        char **json_out);

/**
 * Loads a model file written by `sprlab train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SprlabStatus sprlab_model_load(const char *path, struct SprlabModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from `sprlab_model_load` and not be used afterwards.
 */
void sprlab_model_free(struct SprlabModel *model);

/**
 * Number of price classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t sprlab_model_num_classes(const struct SprlabModel *model);

/**
 * Number of buses in the predicted price vectors, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t sprlab_model_num_buses(const struct SprlabModel *model);

/**
 * Predicts the price class of a full per-bus load vector.
 *
 * Writes the 0-based class to `class_out` and its price vector to `lmp_out`
 * (`sprlab_model_num_buses` values).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum SprlabStatus sprlab_model_predict(const struct SprlabModel *model,
                                       const double *loads,
                                       size_t n_loads,
                                       size_t *class_out,
                                       double *lmp_out,
                                       size_t lmp_len);

/**
 * Class probabilities for a full per-bus load vector
 * (`sprlab_model_num_classes` values, summing to one).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum SprlabStatus sprlab_model_posterior(const struct SprlabModel *model,
                                         const double *loads,
                                         size_t n_loads,
                                         double *p_out,
                                         size_t p_len);

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into the library.
 */
const char *sprlab_last_error_message(void);

/**
 * Releases a string returned by the library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sprlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPRLAB_H */
