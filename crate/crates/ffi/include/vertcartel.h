#ifndef VERTCARTEL_H
#define VERTCARTEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible entry point.
 */
typedef enum VcStatus {
  VC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  VC_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  VC_STATUS_INVALID_UTF8 = 2,
  /**
   * Scenario JSON failed to parse or validate, or a verifier name is unknown.
   */
  VC_STATUS_SCHEMA = 3,
  /**
   * The model rejected the input (invalid market, failed chain, bad price, ...).
   */
  VC_STATUS_MODEL = 4,
  /**
   * The caller's buffer is shorter than the result; `len_out` holds the size needed.
   */
  VC_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  VC_STATUS_PANIC = 6,
} VcStatus;

/**
 * Report encoding for [`vc_run_scenario`].
 */
typedef enum VcFormat {
  VC_FORMAT_JSON = 0,
  VC_FORMAT_CSV = 1,
} VcFormat;

/**
 * Collusive schedule, deviation prices and critical discount factors.
 */
typedef struct VcCollusion VcCollusion;

/**
 * Nash equilibrium of a market.
 */
typedef struct VcEquilibrium VcEquilibrium;

/**
 * A validated market.
 */
typedef struct VcMarket VcMarket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null if none.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *vc_last_error_message(void);

/**
 * Validates a market with `n` firms and stores a new handle in `*out`.
 *
 * # Safety
 * `qualities` and `costs` must point to `n` readable doubles; `out` must be writable.
 */
enum VcStatus vc_market_new(const double *qualities,
                            const double *costs,
                            size_t n,
                            double theta_lo,
                            double theta_hi,
                            struct VcMarket **out);

/**
 * Releases a market. Null is ignored.
 *
 * # Safety
 * `market` must come from [`vc_market_new`] and not be used afterwards.
 */
void vc_market_free(struct VcMarket *market);

/**
 * Number of firms.
 *
 * # Safety
 * `market` must be a live handle; `n_out` must be writable.
 */
enum VcStatus vc_market_n(const struct VcMarket *market, size_t *n_out);

/**
 * Highest bottom collusive price that keeps the market covered.
 *
 * # Safety
 * `market` must be a live handle; `out` must be writable.
 */
enum VcStatus vc_max_collusive_bottom_price(const struct VcMarket *market, double *out);

/**
 * Nash equilibrium by the direct tridiagonal solve.
 *
 * # Safety
 * `market` must be a live handle; `out` must be writable.
 */
enum VcStatus vc_solve(const struct VcMarket *market, struct VcEquilibrium **out);

/**
 * Releases an equilibrium. Null is ignored.
 *
 * # Safety
 * `eq` must come from [`vc_solve`] and not be used afterwards.
 */
void vc_equilibrium_free(struct VcEquilibrium *eq);

/**
 * Equilibrium prices, one per firm.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_equilibrium_prices(const struct VcEquilibrium *handle,
                                    double *out,
                                    size_t capacity,
                                    size_t *len_out);

/**
 * Price-cost margins at the equilibrium.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_equilibrium_margins(const struct VcEquilibrium *handle,
                                     double *out,
                                     size_t capacity,
                                     size_t *len_out);

/**
 * Market shares (taste mass served by each firm).
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_equilibrium_shares(const struct VcEquilibrium *handle,
                                    double *out,
                                    size_t capacity,
                                    size_t *len_out);

/**
 * Equilibrium profits.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_equilibrium_profits(const struct VcEquilibrium *handle,
                                     double *out,
                                     size_t capacity,
                                     size_t *len_out);

/**
 * Marginal consumers between adjacent firms, `n - 1` entries.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_equilibrium_thresholds(const struct VcEquilibrium *handle,
                                        double *out,
                                        size_t capacity,
                                        size_t *len_out);

/**
 * Collusive schedule with bottom price `p1c` for the covered market.
 *
 * # Safety
 * `market` and `eq` must be live handles, `eq` solved from `market`;
 * `out` must be writable.
 */
enum VcStatus vc_collude(const struct VcMarket *market,
                         const struct VcEquilibrium *eq,
                         double p1c,
                         struct VcCollusion **out);

/**
 * Releases a collusion report. Null is ignored.
 *
 * # Safety
 * `report` must come from [`vc_collude`] and not be used afterwards.
 */
void vc_collusion_free(struct VcCollusion *report);

/**
 * Collusive prices, one per firm.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_collusion_prices(const struct VcCollusion *handle,
                                  double *out,
                                  size_t capacity,
                                  size_t *len_out);

/**
 * Each firm's best one-shot deviation from the collusive prices.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_collusion_deviation_prices(const struct VcCollusion *handle,
                                            double *out,
                                            size_t capacity,
                                            size_t *len_out);

/**
 * Critical discount factor of each firm.
 *
 * # Safety
 * `handle` must be live; `out` must hold `capacity` writable doubles and
 * `len_out` must be writable.
 */
enum VcStatus vc_collusion_critical_deltas(const struct VcCollusion *handle,
                                           double *out,
                                           size_t capacity,
                                           size_t *len_out);

/**
 * Firm with the largest critical discount factor, or -1 at zero uplift.
 *
 * # Safety
 * `report` must be a live handle; `firm_out` must be writable.
 */
enum VcStatus vc_collusion_binding_firm(const struct VcCollusion *report, int64_t *firm_out);

/**
 * Incentive constraint value of `firm` at discount factor `delta`;
 * nonnegative when the firm prefers to keep colluding.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum VcStatus vc_collusion_icc(const struct VcCollusion *report,
                               size_t firm,
                               double delta,
                               double *out);

/**
 * Runs a scenario given as JSON text and stores the rendered report in
 * `*report_out` (free with [`vc_string_free`]) and the command-line exit
 * code in `*exit_code_out`. Model failures still produce a report, with
 * `VcStatus::Ok` and a nonzero exit code; only unreadable scenarios fail.
 *
 * # Safety
 * `scenario_json` must be a nul-terminated string; the out pointers must be writable.
 */
enum VcStatus vc_run_scenario(const char *scenario_json,
                              enum VcFormat format,
                              char **report_out,
                              int32_t *exit_code_out);

/**
 * Runs a named property verifier and stores its JSON summary in
 * `*summary_out` (free with [`vc_string_free`]). `tolerance <= 0` selects
 * the verifier's default. `*passed_out` is 1 when no counterexample was found.
 *
 * # Safety
 * `name` must be a nul-terminated string; the out pointers must be writable.
 */
enum VcStatus vc_verify(const char *name,
                        size_t count,
                        uint64_t seed,
                        double tolerance,
                        char **summary_out,
                        int32_t *passed_out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void vc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VERTCARTEL_H */
