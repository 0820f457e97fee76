#ifndef COINWEIGH_H
#define COINWEIGH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_INSTANCE = 2,
  CW_STATUS_DESCRIPTOR = 3,
  CW_STATUS_SIZE = 4,
  CW_STATUS_CORRUPTED_ORACLE = 5,
  CW_STATUS_CONTRACT = 6,
  CW_STATUS_DOMAIN = 7,
  CW_STATUS_PROTOCOL = 8,
  CW_STATUS_PANIC = 9,
} CwStatus;

// Counting scale over a fixed instance.
typedef struct CwOracle CwOracle;

// Finished feedback-code session.
typedef struct CwSession CwSession;

// Completed search trace.
typedef struct CwTrace CwTrace;

typedef struct CwTraceSummary {
  uint32_t m;
  uint32_t l1;
  uint32_t l2;
  uint32_t n;
  uint32_t l3;
  uint64_t total;
  // Ascending.
  uint64_t recovered[3];
} CwTraceSummary;

typedef struct CwSweepSummary {
  uint32_t m;
  uint64_t placements_checked;
  uint64_t failures;
  uint64_t total_weighings;
  uint64_t exact_mean_numer;
  uint64_t exact_mean_denom;
  uint64_t max_total;
} CwSweepSummary;

typedef struct CwMonteCarloSummary {
  uint32_t m;
  uint64_t trials;
  uint64_t seed;
  double mean;
  double stddev;
  double stderr_;
  uint64_t failures;
} CwMonteCarloSummary;

typedef struct CwSessionSummary {
  uint32_t l;
  uint64_t total;
  uint64_t ambiguities;
  uint64_t messages[3];
  uint64_t decoded[3];
} CwSessionSummary;

typedef struct CwSlot {
  // 1 or 2.
  uint8_t stage;
  uint32_t k;
  uint8_t inputs[3];
  uint8_t output;
} CwSlot;

typedef struct CwChannelSweepSummary {
  uint32_t l;
  uint64_t sessions;
  uint64_t failures;
  uint64_t law_violations;
  uint64_t mean_numer;
  uint64_t mean_denom;
} CwChannelSweepSummary;

// Message for the last failing call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *cw_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void cw_string_free(char *s);

// # Safety
// `forged` must point to three `uint64_t`; `out` must be writable.
enum CwStatus cw_oracle_new(uint32_t m, const uint64_t *forged, struct CwOracle **out);

// # Safety
// `oracle` must be null or a handle from [`cw_oracle_new`], not yet freed.
void cw_oracle_free(struct CwOracle *oracle);

// Weighings answered so far; 0 for a null handle.
//
// # Safety
// `oracle` must be null or a live handle.
uint64_t cw_oracle_query_count(const struct CwOracle *oracle);

// Weighs the lower (`upper == false`) or upper half of `[base, base + len)`.
//
// # Safety
// `oracle` must be a live handle; `out` must be writable.
enum CwStatus cw_oracle_weigh_half(struct CwOracle *oracle,
                                   uint64_t base,
                                   uint64_t len,
                                   bool upper,
                                   uint8_t *out);

// Weighs an explicit coin list (instances with at most 2^12 coins).
//
// # Safety
// `coins` must hold `count` readable values; `oracle` live; `out` writable.
enum CwStatus cw_oracle_weigh_coins(struct CwOracle *oracle,
                                    const uint64_t *coins,
                                    size_t count,
                                    uint8_t *out);

// Runs the three-stage search against `oracle`.
//
// # Safety
// `oracle` must be a live handle; `out` must be writable.
enum CwStatus cw_search(struct CwOracle *oracle, struct CwTrace **out);

// # Safety
// `trace` must be a live handle; `out` must be writable.
enum CwStatus cw_trace_summary(const struct CwTrace *trace, struct CwTraceSummary *out);

// JSON rendering of the trace; free with [`cw_string_free`].
//
// # Safety
// `trace` must be a live handle; `out` must be writable.
enum CwStatus cw_trace_to_json(const struct CwTrace *trace, char **out);

// # Safety
// `trace` must be null or a handle from [`cw_search`], not yet freed.
void cw_trace_free(struct CwTrace *trace);

// Decode-table lookup. Pass `second < 0` when the first reading is 0 or 3.
//
// # Safety
// `out` must point to three writable bytes.
enum CwStatus cw_decode_row(uint8_t first, int32_t second, uint8_t *out);

// # Safety
// `out` must be writable.
enum CwStatus cw_mean_triple_sum(uint32_t m, double *out);

// # Safety
// `out` must be writable.
enum CwStatus cw_mean_closed_form(uint32_t m, double *out);

// Limiting rate as a fraction (4/7).
//
// # Safety
// Both pointers must be writable.
enum CwStatus cw_asymptotic_rate(uint64_t *numer, uint64_t *denom);

// Exhaustive sweep over every placement, `2 <= m <= 7`.
//
// # Safety
// `out` must be writable.
enum CwStatus cw_exhaustive_verify(uint32_t m, struct CwSweepSummary *out);

// # Safety
// `out` must be writable.
enum CwStatus cw_monte_carlo(uint32_t m,
                             uint64_t trials,
                             uint64_t seed,
                             struct CwMonteCarloSummary *out);

// Simulates one session for three 0-based `l`-bit messages.
//
// # Safety
// `messages` must point to three `uint64_t`; `out` must be writable.
enum CwStatus cw_channel_session(uint32_t l, const uint64_t *messages, struct CwSession **out);

// # Safety
// `session` must be a live handle; `out` must be writable.
enum CwStatus cw_session_summary(const struct CwSession *session, struct CwSessionSummary *out);

// Number of slots; 0 for a null handle.
//
// # Safety
// `session` must be null or a live handle.
size_t cw_session_slot_count(const struct CwSession *session);

// # Safety
// `session` must be a live handle; `out` must be writable.
enum CwStatus cw_session_slot(const struct CwSession *session, size_t index, struct CwSlot *out);

// JSON transcript; free with [`cw_string_free`].
//
// # Safety
// `session` must be a live handle; `out` must be writable.
enum CwStatus cw_session_to_json(const struct CwSession *session, char **out);

// # Safety
// `session` must be null or a handle from [`cw_channel_session`].
void cw_session_free(struct CwSession *session);

// Decodes stage-1 outputs `y` (length `l`) and stage-2 outputs `y2` into
// three 0-based messages.
//
// # Safety
// `y` and `y2` must hold `y_len` and `y2_len` bytes; `out` must point to
// three writable `uint64_t`.
enum CwStatus cw_channel_decode(uint32_t l,
                                const uint8_t *y,
                                size_t y_len,
                                const uint8_t *y2,
                                size_t y2_len,
                                uint64_t *out);

// Runs every message triple for `1 <= l <= 6`.
//
// # Safety
// `out` must be writable.
enum CwStatus cw_channel_verify(uint32_t l, struct CwChannelSweepSummary *out);

#endif  /* COINWEIGH_H */
