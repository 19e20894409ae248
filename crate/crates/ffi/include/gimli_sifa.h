#ifndef GIMLI_SIFA_H
#define GIMLI_SIFA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GimliStatus {
  GIMLI_STATUS_OK = 0,
  GIMLI_STATUS_NULL_POINTER = 1,
  GIMLI_STATUS_INVALID_ARGUMENT = 2,
  GIMLI_STATUS_AUTHENTICATION_FAILED = 3,
  GIMLI_STATUS_CAP_EXCEEDED = 4,
  GIMLI_STATUS_NO_INEFFECTIVE = 5,
  GIMLI_STATUS_TOO_MANY_PARAMETERS = 6,
  GIMLI_STATUS_BUFFER_TOO_SMALL = 7,
  GIMLI_STATUS_PANIC = 99,
} GimliStatus;

typedef enum GimliSpBox {
  GIMLI_SP_BOX_OFFICIAL = 0,
  GIMLI_SP_BOX_PAPER = 1,
} GimliSpBox;

typedef enum GimliRow {
  GIMLI_ROW_A = 0,
  GIMLI_ROW_B = 1,
  GIMLI_ROW_C = 2,
} GimliRow;

/**
 * Opaque result of an attack over a whole fault window.
 */
typedef struct GimliAttackReport GimliAttackReport;

/**
 * Opaque fault specification.
 */
typedef struct GimliFaultSpec GimliFaultSpec;

/**
 * Opaque set of ineffective-fault nonces with its campaign metadata.
 */
typedef struct GimliTraceSet GimliTraceSet;

/**
 * Summary of one attacked window bit.
 */
typedef struct GimliBitSummary {
  uint32_t bit;
  uint32_t parameter_count;
  uint64_t n_used;
  uint64_t top_index;
  double top_sei;
  uint64_t tie_count;
  uint64_t ranked_len;
} GimliBitSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *gimli_last_error_message(void);

/**
 * Static, NUL-terminated name of a status code.
 */
const char *gimli_status_name(enum GimliStatus status);

/**
 * Gimli-24-Cipher encryption. `key` is 32 bytes, `nonce` 16 bytes,
 * `ciphertext_out` holds `msg_len` bytes and `tag_out` 16 bytes.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum GimliStatus gimli_aead_encrypt(const uint8_t *key,
                                    const uint8_t *nonce,
                                    const uint8_t *ad,
                                    size_t ad_len,
                                    const uint8_t *msg,
                                    size_t msg_len,
                                    enum GimliSpBox spbox,
                                    uint8_t *ciphertext_out,
                                    uint8_t *tag_out);

/**
 * Gimli-24-Cipher decryption. Returns `AUTHENTICATION_FAILED` and leaves
 * `plaintext_out` untouched when the tag does not verify.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum GimliStatus gimli_aead_decrypt(const uint8_t *key,
                                    const uint8_t *nonce,
                                    const uint8_t *ad,
                                    size_t ad_len,
                                    const uint8_t *ciphertext,
                                    size_t ciphertext_len,
                                    const uint8_t *tag,
                                    enum GimliSpBox spbox,
                                    uint8_t *plaintext_out);

/**
 * Creates a fault specification. `model` uses the CLI syntax, for example
 * `"stuck-at-0"` or `"prob-bitflip:2/3,1/3"`; the fault hits the state
 * before round `round`.
 *
 * # Safety
 * `model` must be NUL-terminated and `out` writable.
 */
enum GimliStatus gimli_fault_spec_new(const char *model,
                                      uint32_t width,
                                      uint32_t round,
                                      enum GimliRow row,
                                      uint32_t col,
                                      uint32_t offset,
                                      struct GimliFaultSpec **out);

/**
 * # Safety
 * `spec` must come from [`gimli_fault_spec_new`] or be null.
 */
void gimli_fault_spec_free(struct GimliFaultSpec *spec);

/**
 * Probability that one fault leaves the window unchanged.
 *
 * # Safety
 * `spec` must be a live handle and `out` writable.
 */
enum GimliStatus gimli_fault_spec_analytic_rate(const struct GimliFaultSpec *spec, double *out);

/**
 * Runs faulted decryptions until `target` ineffective faults are found.
 * On `CAP_EXCEEDED` the partial trace set is still stored in `out`.
 *
 * # Safety
 * `key` must point to 32 bytes, `spec` be a live handle, `out` writable.
 */
enum GimliStatus gimli_collect(const uint8_t *key,
                               const struct GimliFaultSpec *spec,
                               size_t target,
                               uint64_t seed,
                               uint64_t cap,
                               enum GimliSpBox spbox,
                               struct GimliTraceSet **out);

/**
 * Parses the text trace-file format.
 *
 * # Safety
 * `input` must be NUL-terminated and `out` writable.
 */
enum GimliStatus gimli_trace_set_parse(const char *input, struct GimliTraceSet **out);

/**
 * Writes the trace file text, NUL-terminated, into `buf`. `needed` receives
 * the text length without the NUL; a too small buffer gives `BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `set` must be a live handle, `buf` valid for `cap` bytes (or null with
 * `cap == 0`), `needed` writable or null.
 */
enum GimliStatus gimli_trace_set_write(const struct GimliTraceSet *set,
                                       char *buf,
                                       size_t cap,
                                       size_t *needed);

/**
 * Number of collected nonces (0 for a null handle).
 *
 * # Safety
 * `set` must be a live handle or null.
 */
size_t gimli_trace_set_len(const struct GimliTraceSet *set);

/**
 * Number of trials the campaign ran (0 for a null handle).
 *
 * # Safety
 * `set` must be a live handle or null.
 */
uint64_t gimli_trace_set_trials(const struct GimliTraceSet *set);

/**
 * Copies nonce `index` (16 bytes) into `out`.
 *
 * # Safety
 * `set` must be a live handle and `out` valid for 16 bytes.
 */
enum GimliStatus gimli_trace_set_nonce(const struct GimliTraceSet *set, size_t index, uint8_t *out);

/**
 * # Safety
 * `set` must come from this library or be null.
 */
void gimli_trace_set_free(struct GimliTraceSet *set);

/**
 * Ranks key hypotheses for every bit of the trace set's fault window.
 * `bias_hint` is -1 for none, otherwise the bit value expected to dominate.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum GimliStatus gimli_attack(const struct GimliTraceSet *set,
                              enum GimliSpBox spbox,
                              int32_t bias_hint,
                              size_t keep,
                              struct GimliAttackReport **out);

/**
 * Number of window bits in the report (0 for a null handle).
 *
 * # Safety
 * `report` must be a live handle or null.
 */
size_t gimli_attack_report_bit_count(const struct GimliAttackReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum GimliStatus gimli_attack_report_bit(const struct GimliAttackReport *report,
                                         size_t index,
                                         struct GimliBitSummary *out);

/**
 * Hypothesis index and SEI at 0-based `rank` for window bit `index`.
 *
 * # Safety
 * `report` must be a live handle; the out pointers writable.
 */
enum GimliStatus gimli_attack_report_ranked(const struct GimliAttackReport *report,
                                            size_t index,
                                            size_t rank,
                                            uint64_t *hypothesis_out,
                                            double *sei_out);

/**
 * # Safety
 * `report` must come from [`gimli_attack`] or be null.
 */
void gimli_attack_report_free(struct GimliAttackReport *report);

/**
 * Number of hypothesis parameters of one state bit before round `round`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GimliStatus gimli_depmap_parameter_count(uint32_t round,
                                              enum GimliRow row,
                                              uint32_t col,
                                              uint32_t bit,
                                              enum GimliSpBox spbox,
                                              uint32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIMLI_SIFA_H */
