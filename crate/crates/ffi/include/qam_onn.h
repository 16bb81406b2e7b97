#ifndef QAM_ONN_H
#define QAM_ONN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QamStatus {
  QAM_STATUS_OK = 0,
  QAM_STATUS_NULL_POINTER = 1,
  QAM_STATUS_INPUT = 2,
  QAM_STATUS_CONFIG = 3,
  QAM_STATUS_FORMAT = 4,
  QAM_STATUS_RANGE = 5,
  QAM_STATUS_TRAINING = 6,
  QAM_STATUS_IO = 7,
  QAM_STATUS_SERDE = 8,
  QAM_STATUS_BUFFER_TOO_SMALL = 9,
  QAM_STATUS_PANIC = 10,
} QamStatus;

typedef enum QamVariant {
  QAM_VARIANT_QAM_NET = 0,
  QAM_VARIANT_LEVEL_EQUIVALENT = 1,
  QAM_VARIANT_HARDWARE_EQUIVALENT = 2,
  QAM_VARIANT_ENERGY_EQUIVALENT = 3,
} QamVariant;

/**
 * A loaded checkpoint, ready for digital inference with its training
 * constellation.
 */
typedef struct QamNetwork QamNetwork;

typedef struct QamComplex {
  double re;
  double im;
} QamComplex;

typedef struct QamEquivalenceRow {
  enum QamVariant variant;
  uint64_t total_levels;
  double bits_per_value;
  uint64_t weight_values;
  double energy_per_value;
} QamEquivalenceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `cap` bytes. Returns the full message length in bytes.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
size_t qam_last_error(char *buf, size_t cap);

/**
 * Nearest point of the `levels`-point grid on [-1, 1].
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_quantize_1d(double x, uint32_t levels, double *result);

/**
 * Nearest symbol of the square QAM grid with `side` levels per axis.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_quantize_complex(struct QamComplex z, uint32_t side, struct QamComplex *result);

/**
 * `sum_j w_j conj(x_j)` on the simulated I/Q engine. `side == 0`
 * disables quantization; `snr_db` may be `INFINITY` for a noiseless run.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_iq_inner_product(const struct QamComplex *w,
                                    const struct QamComplex *x,
                                    size_t n,
                                    uint32_t side,
                                    double snr_db,
                                    uint64_t seed,
                                    struct QamComplex *result);

/**
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_energy_equivalent_levels(uint64_t total_levels, uint64_t *result);

/**
 * Fills `rows[0..4]` with the equivalence table for a `w x w` input,
 * `h` hidden neurons and `c` classes.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_equivalence_table(uint64_t total_levels,
                                     uint64_t w,
                                     uint64_t h,
                                     uint64_t c,
                                     struct QamEquivalenceRow *rows);

/**
 * Client activation energy in units of Δ² for layer sizes `h_0..h_{L+1}`.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_client_activation_energy(const size_t *sizes,
                                            size_t n_sizes,
                                            uint64_t total_levels,
                                            bool complex_valued,
                                            double *result);

/**
 * Loads a checkpoint file. On success `*network` owns a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum QamStatus qam_network_load(const char *path, struct QamNetwork **network);

/**
 * Releases a handle from [`qam_network_load`]; null is ignored.
 *
 * # Safety
 * `network` must come from `qam_network_load` and not be used afterwards.
 */
void qam_network_free(struct QamNetwork *network);

/**
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_network_input_size(const struct QamNetwork *network, size_t *result);

/**
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_network_classes(const struct QamNetwork *network, size_t *result);

/**
 * Digital logits for pixel input (values 0..255). Networks with an
 * embedding look pixels up; real networks scale them to [0, 1].
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_network_forward_pixels(const struct QamNetwork *network,
                                          const uint8_t *pixels,
                                          size_t n_pixels,
                                          double *logits,
                                          size_t logits_cap);

/**
 * Digital logits for complex input of a network without an embedding.
 *
 * # Safety
 * Pointer arguments must be null or valid for the documented extent.
 */
enum QamStatus qam_network_forward_complex(const struct QamNetwork *network,
                                           const struct QamComplex *values,
                                           size_t n_values,
                                           double *logits,
                                           size_t logits_cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QAM_ONN_H */
