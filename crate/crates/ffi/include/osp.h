#ifndef OSP_H
#define OSP_H

/* Generated by cbindgen from the osp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every FFI entry point.
 */
typedef enum {
  OSP_STATUS_OK = 0,
  OSP_STATUS_NULL_POINTER = 1,
  OSP_STATUS_INVALID_UTF8 = 2,
  OSP_STATUS_PARSE_ERROR = 3,
  OSP_STATUS_INVALID_ARGUMENT = 4,
  OSP_STATUS_SOLVE_ERROR = 5,
  OSP_STATUS_SIM_ERROR = 6,
  OSP_STATUS_BUFFER_TOO_SMALL = 7,
  OSP_STATUS_PANIC = 8,
} OspStatus;

/**
 * Channel-knowledge scenario selector.
 */
typedef enum {
  OSP_VARIANT_FULL = 0,
  OSP_VARIANT_PARTIAL_CONSTANT_RATE = 1,
  OSP_VARIANT_PARTIAL_VARIABLE_RATE = 2,
  OSP_VARIANT_STATISTICAL = 3,
} OspVariant;

/**
 * Opaque parsed configuration.
 */
typedef struct OspConfig OspConfig;

/**
 * Opaque solve outcome; keeps the configuration it was solved for.
 */
typedef struct OspReport OspReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses an experiment configuration (the `[system]`/`[channels]` sections
 * define the problem; any sweep section is ignored here) into a config
 * handle. The handle must be released with `osp_config_free`.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
OspStatus osp_config_parse(const char *text, OspConfig **out);

/**
 * Rewrites the channel-knowledge scenario of a parsed configuration.
 *
 * # Safety
 * `config` must be a live handle from `osp_config_parse`.
 */
OspStatus osp_config_set_variant(OspConfig *config, OspVariant variant);

/**
 * Battery capacity of a parsed configuration, in energy quanta.
 *
 * # Safety
 * `config` must be a live handle.
 */
uint32_t osp_config_battery_capacity(const OspConfig *config);

/**
 * Releases a config handle. Passing NULL is a no-op.
 *
 * # Safety
 * `config` must be NULL or a handle not freed before.
 */
void osp_config_free(OspConfig *config);

/**
 * Solves a configuration for its optimal secrecy policy.
 *
 * `uniform_split` nonzero replaces the optimal power splitting with the
 * uniform baseline. The report handle must be released with
 * `osp_report_free`.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
OspStatus osp_solve(const OspConfig *config, int32_t uniform_split, OspReport **out);

/**
 * Long-run secrecy rate of a solved policy in bits per slot.
 *
 * # Safety
 * `report` must be a live handle.
 */
double osp_report_gain(const OspReport *report);

/**
 * Policy-iteration rounds the solve took.
 *
 * # Safety
 * `report` must be a live handle.
 */
uint32_t osp_report_iterations(const OspReport *report);

/**
 * Number of battery levels (e_max + 1) in the steady-state vector.
 *
 * # Safety
 * `report` must be a live handle.
 */
size_t osp_report_battery_levels(const OspReport *report);

/**
 * Number of channel states the policy distinguishes.
 *
 * # Safety
 * `report` must be a live handle.
 */
size_t osp_report_channel_states(const OspReport *report);

/**
 * Copies the battery steady-state distribution into `buf`.
 *
 * # Safety
 * `report` must be a live handle and `buf` must point to `len` doubles.
 */
OspStatus osp_report_battery_steady_state(const OspReport *report, double *buf, size_t len);

/**
 * Total transmit power (in quanta) the policy assigns to one state.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
OspStatus osp_report_action(const OspReport *report,
                            uint32_t battery,
                            size_t channel_state,
                            uint32_t *out);

/**
 * Simulates the solved policy and returns the empirical rate and its
 * batch-means standard error.
 *
 * # Safety
 * `report` must be a live handle; `rate_out` and `std_err_out` must be
 * valid pointers.
 */
OspStatus osp_simulate(const OspReport *report,
                       uint64_t slots,
                       uint64_t seed,
                       double *rate_out,
                       double *std_err_out);

/**
 * Releases a report handle. Passing NULL is a no-op.
 *
 * # Safety
 * `report` must be NULL or a handle not freed before.
 */
void osp_report_free(OspReport *report);

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *osp_last_error(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* OSP_H */
