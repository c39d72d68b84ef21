/* C interface to the assistive-signals toolkit. */

#ifndef ASSISTIVE_SIGNALS_H
#define ASSISTIVE_SIGNALS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call. Mirrors the CLI exit codes.
 */
typedef enum AsigStatus {
  AsigStatus_Ok = 0,
  /**
   * Invalid arguments: null pointers, bad sizes, bad config.
   */
  AsigStatus_Usage = 2,
  /**
   * Malformed input files (checkpoints, meshes, images).
   */
  AsigStatus_Format = 3,
  /**
   * Everything else that failed at runtime.
   */
  AsigStatus_Runtime = 4,
} AsigStatus;

/**
 * An opaque classifier handle.
 */
typedef struct AsigClassifier AsigClassifier;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *asig_version(void);

/**
 * Copy the last error message (UTF-8) into `buf`. Returns the full message
 * length; when it exceeds `cap - 1` the copy is truncated. `buf` may be
 * null to query the length.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
uintptr_t asig_last_error(char *buf, uintptr_t cap);

/**
 * Load a reference-CNN checkpoint. On success stores the handle in `out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum AsigStatus asig_classifier_load(const char *path, struct AsigClassifier **out);

/**
 * Destroy a classifier handle. Null is a no-op.
 *
 * # Safety
 * `handle` must have come from [`asig_classifier_load`] and not be freed twice.
 */
void asig_classifier_free(struct AsigClassifier *handle);

/**
 * Number of classes, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be valid or null.
 */
uintptr_t asig_classifier_num_classes(const struct AsigClassifier *handle);

/**
 * Expected input height, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be valid or null.
 */
uintptr_t asig_classifier_input_height(const struct AsigClassifier *handle);

/**
 * Expected input width, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be valid or null.
 */
uintptr_t asig_classifier_input_width(const struct AsigClassifier *handle);

/**
 * Classify one image; writes `num_classes` probabilities into `out_probs`.
 *
 * # Safety
 * `pixels` must hold `height * width * 3` doubles and `out_probs` must have
 * room for `num_classes` doubles.
 */
enum AsigStatus asig_classifier_predict(const struct AsigClassifier *handle,
                                        const double *pixels,
                                        uintptr_t height,
                                        uintptr_t width,
                                        double *out_probs,
                                        uintptr_t num_classes);

/**
 * Gradient of the cross-entropy to `target_label` with respect to the
 * input; writes `height * width * 3` doubles into `out_grad`.
 *
 * # Safety
 * Buffer contracts as in [`asig_classifier_predict`].
 */
enum AsigStatus asig_classifier_input_gradient(const struct AsigClassifier *handle,
                                               const double *pixels,
                                               uintptr_t height,
                                               uintptr_t width,
                                               uintptr_t target_label,
                                               double *out_grad);

/**
 * FGSM attack in place: `pixels <- clip(pixels + eps * sign(grad))`.
 *
 * # Safety
 * `pixels` must hold `height * width * 3` writable doubles.
 */
enum AsigStatus asig_fgsm(const struct AsigClassifier *handle,
                          double *pixels,
                          uintptr_t height,
                          uintptr_t width,
                          uintptr_t true_label,
                          double epsilon);

/**
 * PGD attack in place.
 *
 * # Safety
 * As [`asig_fgsm`].
 */
enum AsigStatus asig_pgd(const struct AsigClassifier *handle,
                         double *pixels,
                         uintptr_t height,
                         uintptr_t width,
                         uintptr_t true_label,
                         double epsilon,
                         double step_size,
                         uintptr_t steps);

/**
 * Assistive hardening in place: iterative descent on the cross-entropy to
 * `true_label`. Pass `epsilon < 0` for an unconstrained run.
 *
 * # Safety
 * As [`asig_fgsm`].
 */
enum AsigStatus asig_harden(const struct AsigClassifier *handle,
                            double *pixels,
                            uintptr_t height,
                            uintptr_t width,
                            uintptr_t true_label,
                            double step_size,
                            uintptr_t iterations,
                            bool use_sign_gradient,
                            double epsilon);

/**
 * Run a full experiment from a TOML config file, writing a run directory
 * under `out_dir`. When `run_dir_buf` is non-null the created directory
 * path is copied into it (truncated to `cap - 1` bytes, NUL-terminated).
 * `seed_override < 0` keeps the config's seed.
 *
 * # Safety
 * `config_path` and `out_dir` must be valid NUL-terminated strings;
 * `run_dir_buf` must be null or hold `cap` writable bytes.
 */
enum AsigStatus asig_run_experiment(const char *config_path,
                                    const char *out_dir,
                                    int64_t seed_override,
                                    bool deceptive,
                                    char *run_dir_buf,
                                    uintptr_t cap);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ASSISTIVE_SIGNALS_H */
