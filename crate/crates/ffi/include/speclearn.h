#ifndef SPECLEARN_H
#define SPECLEARN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_CONFIG = 2,
  SL_STATUS_NUMERICAL = 3,
  SL_STATUS_INPUT = 4,
  SL_STATUS_IO = 5,
  SL_STATUS_PANIC = 6,
} SlStatus;

/**
 * A problem together with its assembled Galerkin system.
 */
typedef struct SlDiscretisation SlDiscretisation;

/**
 * A trained coefficient network.
 */
typedef struct SlModel SlModel;

/**
 * Training options; obtain defaults from [`sl_train_options_default`].
 */
typedef struct SlTrainOptions {
  size_t hidden;
  size_t samples;
  size_t epochs;
  size_t adam_epochs;
  double adam_lr;
  uint64_t seed;
} SlTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *sl_last_error_message(void);

/**
 * Build the discretisation of a registered problem. `basis_n` or
 * `quad_degree` equal to 0 selects the problem default.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum SlStatus sl_discretisation_new(const char *name,
                                    size_t basis_n,
                                    size_t quad_degree,
                                    struct SlDiscretisation **out);

/**
 * # Safety
 * `disc` must come from [`sl_discretisation_new`] and not be used afterwards. Null is ignored.
 */
void sl_discretisation_free(struct SlDiscretisation *disc);

/**
 * Number of spectral coefficients.
 *
 * # Safety
 * `disc` must be a live handle.
 */
enum SlStatus sl_discretisation_dim(const struct SlDiscretisation *disc, size_t *out);

/**
 * Length of a parameter vector.
 *
 * # Safety
 * `disc` must be a live handle.
 */
enum SlStatus sl_discretisation_param_dim(const struct SlDiscretisation *disc, size_t *out);

/**
 * Galerkin solve for one parameter vector; writes `dim` coefficients.
 *
 * # Safety
 * `params` holds `n_params` values and `out` has room for `capacity`.
 */
enum SlStatus sl_direct_solve(const struct SlDiscretisation *disc,
                              const double *params,
                              size_t n_params,
                              double *out,
                              size_t capacity);

/**
 * Value of the expansion with coefficients `coeffs` at one point
 * (`x`, or `(t, x)` for space-time problems).
 *
 * # Safety
 * `coeffs` holds `n_coeffs` values and `point` holds `n_point`.
 */
enum SlStatus sl_evaluate(const struct SlDiscretisation *disc,
                          const double *coeffs,
                          size_t n_coeffs,
                          const double *point,
                          size_t n_point,
                          double *out);

/**
 * Exact solution of the problem at one point.
 *
 * # Safety
 * `params` holds `n_params` values and `point` holds `n_point`.
 */
enum SlStatus sl_exact(const struct SlDiscretisation *disc,
                       const double *params,
                       size_t n_params,
                       const double *point,
                       size_t n_point,
                       double *out);

struct SlTrainOptions sl_train_options_default(void);

/**
 * Train a network. `activation` is one of `tanh`, `sigmoid`, `relu`, `silu`.
 *
 * # Safety
 * `disc` must be a live handle, `activation` a nul-terminated string and
 * `out_model` a valid pointer. `out_final_loss` may be null.
 */
enum SlStatus sl_train(const struct SlDiscretisation *disc,
                       const char *activation,
                       struct SlTrainOptions options,
                       struct SlModel **out_model,
                       double *out_final_loss);

/**
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum SlStatus sl_model_load(const char *path, struct SlModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a nul-terminated string.
 */
enum SlStatus sl_model_save(const struct SlModel *model, const char *path);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is ignored.
 */
void sl_model_free(struct SlModel *model);

/**
 * Coefficients predicted by the network for one parameter vector.
 *
 * # Safety
 * `params` holds `n_params` values and `out` has room for `capacity`.
 */
enum SlStatus sl_model_predict(const struct SlModel *model,
                               const struct SlDiscretisation *disc,
                               const double *params,
                               size_t n_params,
                               double *out,
                               size_t capacity);

/**
 * Test errors on `test_count` fresh draws; `resolution` points per dimension.
 *
 * # Safety
 * Handles must be live; `out_l2` and `out_linf` valid pointers.
 */
enum SlStatus sl_test_error(const struct SlModel *model,
                            const struct SlDiscretisation *disc,
                            size_t test_count,
                            uint64_t seed,
                            size_t resolution,
                            double *out_l2,
                            double *out_linf);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECLEARN_H */
