#ifndef NETRA_H
#define NETRA_H

/* Generated by cbindgen at build time. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Bytes in an encoded alert frame.
 */
#define NETRA_PAYLOAD_LEN 31

/**
 * Result codes. Zero is success.
 */
typedef enum NetraStatus {
  NETRA_STATUS_OK = 0,
  NETRA_STATUS_NULL_POINTER = 1,
  NETRA_STATUS_INVALID_UTF8 = 2,
  NETRA_STATUS_CONFIG = 3,
  NETRA_STATUS_PARSE = 4,
  NETRA_STATUS_INTEGRITY = 5,
  NETRA_STATUS_LENGTH = 6,
  NETRA_STATUS_VERSION = 7,
  NETRA_STATUS_MALFORMED = 8,
  NETRA_STATUS_INVALID_INPUT = 9,
  NETRA_STATUS_CALIBRATION = 10,
  NETRA_STATUS_NOT_FOUND = 11,
  NETRA_STATUS_IO = 12,
  NETRA_STATUS_UNDEFINED = 13,
  NETRA_STATUS_BUFFER_TOO_SMALL = 14,
  NETRA_STATUS_PANIC = 99,
} NetraStatus;

/**
 * Calibrated fusion gate.
 */
typedef struct NetraFusion NetraFusion;

/**
 * Loaded scenario, ready to run.
 */
typedef struct NetraScenario NetraScenario;

/**
 * Alert fields. `label` and `priority` use the wire codes.
 */
typedef struct NetraAlert {
  uint64_t alert_id;
  /**
   * 0 background, 1 human, 2 animal, 3 elephant, 4 obstruction.
   */
  uint8_t label;
  /**
   * 0 critical, 1 high, 2 medium, 3 low.
   */
  uint8_t priority;
  double ips;
  double lat;
  double lon;
  uint64_t timestamp_ms;
} NetraAlert;

typedef struct NetraDecision {
  bool camera;
  double p_intrusion;
  double p_dist;
  /**
   * 0 none, 1 no motion, 2 non-positive change, 3 out of range, 4 below
   * threshold.
   */
  uint8_t reject_reason;
} NetraDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *netra_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *netra_version(void);

/**
 * Build a quantized alert and derive its id.
 *
 * # Safety
 * `out` must be NULL or point to writable memory for one `NetraAlert`.
 */
enum NetraStatus netra_alert_new(uint8_t label, uint8_t priority, double ips, double lat, double lon, uint64_t timestamp_ms, struct NetraAlert *out);

/**
 * Encode `alert` into `out`, which must hold at least `NETRA_PAYLOAD_LEN`
 * bytes.
 *
 * # Safety
 * `alert` must point to a valid `NetraAlert`; `out` to `out_len` writable
 * bytes.
 */
enum NetraStatus netra_encode_payload(const struct NetraAlert *alert, uint8_t *out, uintptr_t out_len);

/**
 * Decode and verify a frame.
 *
 * # Safety
 * `buf` must point to `len` readable bytes; `out` to one writable
 * `NetraAlert`.
 */
enum NetraStatus netra_decode_payload(const uint8_t *buf, uintptr_t len, struct NetraAlert *out);

/**
 * LoRa time on air at 125 kHz, CR 4/5.
 *
 * # Safety
 * `out_s` must point to a writable `double`.
 */
enum NetraStatus netra_airtime_s(uintptr_t payload_len, uint8_t sf, double *out_s);

/**
 * Calibrate from exactly five empty-track distances, in metres.
 *
 * # Safety
 * `distances` must point to `n` readable doubles; `out` to a writable
 * handle pointer.
 */
enum NetraStatus netra_fusion_new(const double *distances, uintptr_t n, struct NetraFusion **out);

/**
 * # Safety
 * `handle` must come from `netra_fusion_new`.
 */
enum NetraStatus netra_fusion_set_tau(struct NetraFusion *handle, double tau_c);

/**
 * Score one sensing cycle. A negative `echo_time_s` means no echo.
 *
 * # Safety
 * `handle` must come from `netra_fusion_new`; `out` must point to a
 * writable `NetraDecision`.
 */
enum NetraStatus netra_fusion_decide(const struct NetraFusion *handle, bool pir, double echo_time_s, struct NetraDecision *out);

/**
 * # Safety
 * `handle` must be NULL or come from `netra_fusion_new`, freed once.
 */
void netra_fusion_free(struct NetraFusion *handle);

/**
 * Load a scenario file. Pass `has_seed = false` to keep the file's seed.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a writable handle pointer.
 */
enum NetraStatus netra_scenario_load(const char *path, bool has_seed, uint64_t seed, struct NetraScenario **out);

/**
 * Run the scenario and return the report as JSON. Free the string with
 * `netra_string_free`.
 *
 * # Safety
 * `handle` must come from `netra_scenario_load`; `out_json` must be a
 * writable pointer.
 */
enum NetraStatus netra_scenario_run_json(const struct NetraScenario *handle, char **out_json);

/**
 * # Safety
 * `handle` must be NULL or come from `netra_scenario_load`, freed once.
 */
void netra_scenario_free(struct NetraScenario *handle);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void netra_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETRA_H */
