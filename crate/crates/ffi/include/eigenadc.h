#ifndef EIGENADC_H
#define EIGENADC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum EaStatus {
  EA_STATUS_OK = 0,
  EA_STATUS_NULL_POINTER = 1,
  EA_STATUS_INVALID_ARGUMENT = 2,
  EA_STATUS_CONFIG_ERROR = 3,
  EA_STATUS_RUNTIME_ERROR = 4,
  EA_STATUS_BUFFER_TOO_SMALL = 5,
  EA_STATUS_PANIC = 6,
} EaStatus;

typedef enum EaAllocator {
  EA_ALLOCATOR_EEPA = 0,
  EA_ALLOCATOR_AOEPA = 1,
  EA_ALLOCATOR_OEPA = 2,
  EA_ALLOCATOR_MMSE = 3,
} EaAllocator;

/**
 * Sampled MIMO channel.
 */
typedef struct EaChannel EaChannel;

/**
 * Simulation configuration.
 */
typedef struct EaConfig EaConfig;

/**
 * Eigenmodes of a channel.
 */
typedef struct EaModes EaModes;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ea_last_error_message(char *buf, size_t len);

/**
 * Default configuration. Never null; release with [`ea_config_free`].
 */
struct EaConfig *ea_config_default(void);

/**
 * Parses flat `key=value` text on top of the defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writing.
 */
enum EaStatus ea_config_parse(const char *text, struct EaConfig **out);

/**
 * Sets one key; the configuration is unchanged if the result is invalid.
 *
 * # Safety
 * `config` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum EaStatus ea_config_set(struct EaConfig *config, const char *key, const char *value);

/**
 * Writes the 16-hex-digit configuration fingerprint plus NUL into `buf`.
 *
 * # Safety
 * `config` must come from this library; `buf` must be valid for `len` bytes.
 */
enum EaStatus ea_config_fingerprint(const struct EaConfig *config, char *buf, size_t len);

/**
 * # Safety
 * `config` must be null or come from this library and not be used afterwards.
 */
void ea_config_free(struct EaConfig *config);

/**
 * Generates channel realization `index` of the configuration's ensemble.
 *
 * # Safety
 * `config` must come from this library; `out` must be valid for writing.
 */
enum EaStatus ea_channel_generate(const struct EaConfig *config,
                                  size_t index,
                                  struct EaChannel **out);

/**
 * Copies the taps of antenna pair (`rx`, `tx`) as interleaved re/im into
 * `out`, which must hold `2 * taps` doubles. `taps_out` receives the count.
 *
 * # Safety
 * Pointers must be valid; `out` must be valid for `len` doubles.
 */
enum EaStatus ea_channel_taps(const struct EaChannel *channel,
                              size_t rx,
                              size_t tx,
                              double *out,
                              size_t len,
                              size_t *taps_out);

/**
 * # Safety
 * `channel` must be null or come from this library and not be used afterwards.
 */
void ea_channel_free(struct EaChannel *channel);

/**
 * Eigenmodes of `channel` on the configuration's subcarrier grid.
 *
 * # Safety
 * Handles must come from this library; `out` must be valid for writing.
 */
enum EaStatus ea_modes_decompose(const struct EaConfig *config,
                                 const struct EaChannel *channel,
                                 struct EaModes **out);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `modes` must be null or come from this library.
 */
size_t ea_modes_count(const struct EaModes *modes);

/**
 * Copies the singular values in global mode order.
 *
 * # Safety
 * `modes` must come from this library; `out` must be valid for `len` doubles.
 */
enum EaStatus ea_modes_singular_values(const struct EaModes *modes, double *out, size_t len);

/**
 * # Safety
 * `modes` must be null or come from this library and not be used afterwards.
 */
void ea_modes_free(struct EaModes *modes);

/**
 * Allocates the configuration's budget `N·L` over `count` modes at
 * `snr_db`. `bits` is the ADC resolution, 0 for full precision. Writes
 * `count` powers to `powers`; `converged` may be null.
 *
 * # Safety
 * `singular_values` and `powers` must be valid for `count` doubles.
 */
enum EaStatus ea_allocate(const struct EaConfig *config,
                          enum EaAllocator allocator,
                          const double *singular_values,
                          size_t count,
                          double snr_db,
                          uint32_t bits,
                          double *powers,
                          bool *converged);

/**
 * Uniform mid-point quantizer with `bits` in 1..=16.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum EaStatus ea_quantize(double x, uint32_t bits, double *out);

/**
 * Principal Lambert W for `z >= 0`.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum EaStatus ea_lambert_w0(double z, double *out);

/**
 * Gaussian tail probability.
 */
double ea_q_function(double x);

/**
 * Analytic `S` and first-order BER for powers on modes; `bits` 0 means
 * full precision.
 *
 * # Safety
 * `powers` and `singular_values` must be valid for `count` doubles;
 * `s_out` and `ber_out` must be valid for writing.
 */
enum EaStatus ea_analytic_ber(const double *powers,
                              const double *singular_values,
                              size_t count,
                              double noise_variance,
                              uint32_t qam_order,
                              uint32_t bits,
                              double alpha,
                              double *s_out,
                              double *ber_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIGENADC_H */
