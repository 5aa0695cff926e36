#ifndef GIGVAD_H
#define GIGVAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GigvadStatus {
  GIGVAD_STATUS_OK = 0,
  GIGVAD_STATUS_NULL_POINTER = 1,
  GIGVAD_STATUS_INVALID_ARGUMENT = 2,
  GIGVAD_STATUS_IO = 3,
  GIGVAD_STATUS_CORRUPT_CHECKPOINT = 4,
  GIGVAD_STATUS_NUMERIC = 5,
  GIGVAD_STATUS_BUFFER_TOO_SMALL = 6,
  GIGVAD_STATUS_PANIC = 7,
} GigvadStatus;

/**
 * Dataset descriptor loaded from a dataset file.
 */
typedef struct GigvadDataset GigvadDataset;

/**
 * Trained head loaded from a checkpoint.
 */
typedef struct GigvadModel GigvadModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call into this library.
 */
const char *gigvad_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gigvad_version(void);

/**
 * Loads a checkpoint into a new model handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GigvadStatus gigvad_model_load(const char *path, struct GigvadModel **out);

/**
 * # Safety
 * `model` must come from [`gigvad_model_load`] and not be freed yet, or be null.
 */
void gigvad_model_free(struct GigvadModel *model);

/**
 * Number of anomaly classes `C`; scores have `1 + C` channels.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum GigvadStatus gigvad_model_classes(const struct GigvadModel *model, size_t *out);

/**
 * Feature channel count `d` the model expects.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum GigvadStatus gigvad_model_channels(const struct GigvadModel *model, size_t *out);

/**
 * Loads a dataset descriptor into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GigvadStatus gigvad_dataset_load(const char *path, struct GigvadDataset **out);

/**
 * # Safety
 * `dataset` must come from [`gigvad_dataset_load`] and not be freed yet, or be null.
 */
void gigvad_dataset_free(struct GigvadDataset *dataset);

/**
 * Number of videos in the dataset.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum GigvadStatus gigvad_dataset_len(const struct GigvadDataset *dataset, size_t *out);

/**
 * Frame count of the video at position `index` (file order).
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum GigvadStatus gigvad_dataset_frames(const struct GigvadDataset *dataset,
                                        size_t index,
                                        size_t *out);

/**
 * Scores every frame of the video at position `index` with the default
 * window protocol and a 4x4 feature grid. Writes `frames * (1 + C)` values,
 * row-major by frame, into `out`. `written` receives the required length;
 * if `capacity` is smaller, nothing is written and `BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * Handles must be live; `out` must hold `capacity` doubles; `written` must be writable.
 */
enum GigvadStatus gigvad_score_video(const struct GigvadModel *model,
                                     const struct GigvadDataset *dataset,
                                     size_t index,
                                     double *out,
                                     size_t capacity,
                                     size_t *written);

/**
 * Frame-level ROC AUC; `labels[i]` nonzero marks a positive.
 *
 * # Safety
 * `scores` and `labels` must each hold `len` elements; `out` must be writable.
 */
enum GigvadStatus gigvad_roc_auc(const double *scores,
                                 const uint8_t *labels,
                                 size_t len,
                                 double *out);

/**
 * Gaussian smoothing with reflect padding; `input` and `out` hold `len` doubles
 * and may not overlap.
 *
 * # Safety
 * `input` must hold `len` doubles and `out` must have room for `len`.
 */
enum GigvadStatus gigvad_gaussian_smooth(const double *input,
                                         size_t len,
                                         double sigma,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIGVAD_H */
