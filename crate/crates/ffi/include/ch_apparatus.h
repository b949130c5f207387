#ifndef CH_APPARATUS_H
#define CH_APPARATUS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bit for line A in line masks.
 */
#define CH_LINE_A 1

/**
 * Bit for line A'.
 */
#define CH_LINE_A_PRIME 2

/**
 * Bit for line B.
 */
#define CH_LINE_B 4

/**
 * Bit for line B'.
 */
#define CH_LINE_B_PRIME 8

/**
 * Stop placements of the modified device.
 */
typedef enum ChSetup {
  CH_SETUP_AB = 0,
  CH_SETUP_AB_PRIME = 1,
  CH_SETUP_A_PRIME_B = 2,
  CH_SETUP_A_PRIME_B_PRIME = 3,
  CH_SETUP_LEFT_A = 4,
  CH_SETUP_LEFT_A_PRIME = 5,
  CH_SETUP_RIGHT_B = 6,
  CH_SETUP_RIGHT_B_PRIME = 7,
} ChSetup;

typedef enum ChStatus {
  CH_STATUS_OK = 0,
  CH_STATUS_INVALID_ARGUMENT = 1,
  CH_STATUS_NULL_POINTER = 2,
  CH_STATUS_CONSISTENCY = 3,
  CH_STATUS_PANIC = 4,
} ChStatus;

/**
 * Opaque validated device.
 */
typedef struct ChApparatus ChApparatus;

typedef struct ChTrialOutcome {
  double r1;
  double r2;
  bool reached_left_stop;
  bool reached_right_stop;
  /**
   * Crossed lines as a mask of `CH_LINE_*` bits.
   */
  uint8_t crossed;
} ChTrialOutcome;

/**
 * Conditional probabilities in the order `(a,b), (a,b'), (a',b), (a',b')`
 * for `joint`, `A, A', B, B'` for `singles`; `full` holds each setting's
 * 2x2 table as `p11, p10, p01, p00`.
 */
typedef struct ChConditionalTable {
  double joint[4];
  double singles[4];
  double full[4][4];
} ChConditionalTable;

typedef struct ChAnalysis {
  double naive_ch;
  double naive_ch_primed;
  double naive_ch_sum;
  /**
   * NaN when every naive conditional is undefined.
   */
  double naive_bayes_max;
  double corrected_ch;
  double reduced_ch;
  double identity_residual;
  bool naive_violated;
  bool corrected_violated;
} ChAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Modified device with the staggered layout for `(gamma, theta)` and
 * stops placed per `setup`, one of the `ChSetup` values.
 */
enum ChStatus ch_apparatus_new_staggered(double gamma,
                                         double theta,
                                         uint32_t setup,
                                         struct ChApparatus **out);

/**
 * Unmodified device with both bodies turning `gamma1`.
 */
enum ChStatus ch_apparatus_new_unmodified(double a,
                                          double a_prime,
                                          double b,
                                          double b_prime,
                                          double gamma1,
                                          struct ChApparatus **out);

/**
 * Releases a handle; null is ignored.
 */
void ch_apparatus_free(struct ChApparatus *app);

enum ChStatus ch_apparatus_run_trial(const struct ChApparatus *app,
                                     double phi,
                                     struct ChTrialOutcome *out);

/**
 * Exact probability that every line in `mask` is crossed (an empty mask
 * gives 1).
 */
enum ChStatus ch_apparatus_crossing_probability(const struct ChApparatus *app,
                                                uint8_t mask,
                                                double *out);

/**
 * Closed-form conditional table of the staggered layout.
 */
enum ChStatus ch_closed_form_table(double gamma, double theta, struct ChConditionalTable *out);

/**
 * Conditional table of the staggered layout from the arc-partition engine.
 */
enum ChStatus ch_exact_table(double gamma, double theta, struct ChConditionalTable *out);

/**
 * Naive and corrected CH analysis of `table` with setting frequencies
 * `freqs` (same order as `joint`).
 */
enum ChStatus ch_analyze(const struct ChConditionalTable *table,
                         const double *freqs,
                         struct ChAnalysis *out);

/**
 * Full demo report as pretty JSON. Release with `ch_string_free`.
 */
enum ChStatus ch_demo_report_json(double gamma,
                                  double theta,
                                  uint64_t seed,
                                  uint64_t trials,
                                  char **out);

void ch_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *ch_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CH_APPARATUS_H */
