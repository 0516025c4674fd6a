#ifndef HYQN_H
#define HYQN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum HyqnStatus {
  HYQN_STATUS_OK = 0,
  HYQN_STATUS_CONFIG = 1,
  HYQN_STATUS_INDEX = 2,
  HYQN_STATUS_NUMERIC = 3,
  HYQN_STATUS_INPUT = 4,
  HYQN_STATUS_PARSE = 5,
  HYQN_STATUS_NON_FINITE = 6,
  HYQN_STATUS_SYNC = 7,
  HYQN_STATUS_WORKER = 8,
  HYQN_STATUS_CHECKPOINT = 9,
  HYQN_STATUS_IO = 10,
  HYQN_STATUS_NULL_POINTER = 11,
  HYQN_STATUS_INVALID_UTF8 = 12,
  HYQN_STATUS_BUFFER_TOO_SMALL = 13,
  HYQN_STATUS_PANIC = 14,
} HyqnStatus;

typedef struct HyqnDataset HyqnDataset;

typedef struct HyqnModel HyqnModel;

typedef struct HyqnStateVector HyqnStateVector;

/**
 * Training options. Obtain defaults from [`hyqn_train_config_default`].
 */
typedef struct HyqnTrainConfig {
  size_t epochs;
  size_t batch_size;
  double base_lr;
  double momentum;
  size_t workers;
  uint64_t seed;
  /**
   * True multiplies the base rate by the worker count.
   */
  bool linear_lr_scaling;
  bool step_decay;
  /**
   * True runs all workers on the calling thread.
   */
  bool serial;
  uint64_t barrier_timeout_ms;
} HyqnTrainConfig;

/**
 * Outcome of [`hyqn_train`].
 */
typedef struct HyqnTrainSummary {
  double final_loss;
  double train_accuracy;
  /**
   * NaN when no validation set was given.
   */
  double val_accuracy;
  uint64_t circuit_evals;
  size_t steps;
  double wall_seconds;
} HyqnTrainSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *hyqn_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum HyqnStatus hyqn_statevector_new(size_t num_qubits, struct HyqnStateVector **out);

/**
 * # Safety
 * `sv` must come from [`hyqn_statevector_new`] and not be used afterwards.
 */
void hyqn_statevector_free(struct HyqnStateVector *sv);

/**
 * # Safety
 * `sv` must be a live handle.
 */
enum HyqnStatus hyqn_statevector_apply_h(struct HyqnStateVector *sv, size_t wire);

/**
 * # Safety
 * `sv` must be a live handle.
 */
enum HyqnStatus hyqn_statevector_apply_ry(struct HyqnStateVector *sv, size_t wire, double theta);

/**
 * # Safety
 * `sv` must be a live handle.
 */
enum HyqnStatus hyqn_statevector_apply_cnot(struct HyqnStateVector *sv,
                                            size_t control,
                                            size_t target);

/**
 * # Safety
 * `sv` must be a live handle and `out` a valid pointer.
 */
enum HyqnStatus hyqn_statevector_expect_z(const struct HyqnStateVector *sv,
                                          size_t wire,
                                          double *out);

/**
 * Seeded random initialisation.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HyqnStatus hyqn_model_new(size_t qubits,
                               size_t depth,
                               size_t feature_dim,
                               size_t num_classes,
                               uint64_t seed,
                               struct HyqnModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void hyqn_model_free(struct HyqnModel *model);

/**
 * Number of trainable scalars, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t hyqn_model_num_params(const struct HyqnModel *model);

/**
 * Copies the flat parameter vector into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum HyqnStatus hyqn_model_params(const struct HyqnModel *model, double *buf, size_t len);

/**
 * Writes `num_classes` logits for one feature vector.
 *
 * # Safety
 * `features` must hold `num_features` doubles and `logits` `logits_len`.
 */
enum HyqnStatus hyqn_model_forward(const struct HyqnModel *model,
                                   const double *features,
                                   size_t num_features,
                                   double *logits,
                                   size_t logits_len);

/**
 * # Safety
 * `features` must hold `num_features` doubles and `out` be valid.
 */
enum HyqnStatus hyqn_model_predict(const struct HyqnModel *model,
                                   const double *features,
                                   size_t num_features,
                                   size_t *out);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string.
 */
enum HyqnStatus hyqn_model_save(const struct HyqnModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` valid.
 */
enum HyqnStatus hyqn_model_load(const char *path, struct HyqnModel **out);

/**
 * Fraction of `data` classified correctly.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum HyqnStatus hyqn_model_evaluate(const struct HyqnModel *model,
                                    const struct HyqnDataset *data,
                                    double *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum HyqnStatus hyqn_dataset_synthetic(size_t n,
                                       size_t feature_dim,
                                       size_t num_classes,
                                       double margin,
                                       uint64_t seed,
                                       struct HyqnDataset **out);

/**
 * Loads a headerless CSV: integer label, then features.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` valid.
 */
enum HyqnStatus hyqn_dataset_load_csv(const char *path, struct HyqnDataset **out);

/**
 * Splits off a seeded validation fraction. Both outputs are new handles.
 *
 * # Safety
 * `data` must be live and both outputs valid.
 */
enum HyqnStatus hyqn_dataset_split(const struct HyqnDataset *data,
                                   double holdout,
                                   uint64_t seed,
                                   struct HyqnDataset **train_out,
                                   struct HyqnDataset **validation_out);

/**
 * # Safety
 * `data` must come from this library and not be used afterwards.
 */
void hyqn_dataset_free(struct HyqnDataset *data);

/**
 * Sample count, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live handle.
 */
size_t hyqn_dataset_len(const struct HyqnDataset *data);

/**
 * # Safety
 * `data` must be NULL or a live handle.
 */
size_t hyqn_dataset_feature_dim(const struct HyqnDataset *data);

/**
 * # Safety
 * `data` must be NULL or a live handle.
 */
size_t hyqn_dataset_num_classes(const struct HyqnDataset *data);

struct HyqnTrainConfig hyqn_train_config_default(void);

/**
 * Trains `model` in place. `validation` may be NULL; `summary` may be NULL.
 *
 * # Safety
 * Handles must be live; `config` must point to an initialised struct.
 */
enum HyqnStatus hyqn_train(struct HyqnModel *model,
                           const struct HyqnDataset *train,
                           const struct HyqnDataset *validation,
                           const struct HyqnTrainConfig *config,
                           struct HyqnTrainSummary *summary);

/**
 * Circuit jobs one training epoch submits.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HyqnStatus hyqn_jobs_per_epoch(uint64_t n_train, size_t qubits, size_t depth, uint64_t *out);

/**
 * Projected wall-clock seconds for a full run on a remote backend.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HyqnStatus hyqn_projected_seconds(uint64_t n_train,
                                       size_t qubits,
                                       size_t depth,
                                       uint64_t epochs,
                                       double seconds_per_job,
                                       double queue_seconds,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYQN_H */
