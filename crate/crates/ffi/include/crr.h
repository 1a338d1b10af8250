#ifndef CRR_H
#define CRR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CrrStatus {
  CRR_STATUS_OK = 0,
  CRR_STATUS_NULL_POINTER = 1,
  CRR_STATUS_INVALID_UTF8 = 2,
  CRR_STATUS_IO = 3,
  CRR_STATUS_PARSE = 4,
  CRR_STATUS_INVALID_ARGUMENT = 5,
  CRR_STATUS_INTERNAL = 6,
} CrrStatus;

typedef enum CrrVerdictKind {
  CRR_VERDICT_KIND_COUNTEREXAMPLE = 0,
  CRR_VERDICT_KIND_HOLDS_BOUNDED = 1,
  CRR_VERDICT_KIND_HOLDS_BY_LOOP = 2,
  CRR_VERDICT_KIND_RESOURCE_OUT = 3,
} CrrVerdictKind;

/**
 * A loaded transition system.
 */
typedef struct CrrModel CrrModel;

/**
 * The result of a check.
 */
typedef struct CrrVerdict CrrVerdict;

/**
 * Check settings. Zero means "no limit" for `conflict_limit`, `wall_ms`
 * and `pqe_max_queries`.
 */
typedef struct CrrOptions {
  uint64_t seed;
  uint64_t conflict_limit;
  uint64_t wall_ms;
  uint64_t pqe_max_queries;
  bool expand_clauses;
} CrrOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Options with a fixed seed and no limits.
 */
struct CrrOptions crr_options_default(void);

/**
 * Loads an ASCII AIGER file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrrStatus crr_model_from_aiger_file(const char *path, struct CrrModel **out);

/**
 * Parses an ASCII AIGER model from memory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrrStatus crr_model_from_aiger_str(const char *text, struct CrrModel **out);

/**
 * Builds the `k`-bit counter failing at value `d`, with the standard
 * encoding or, when `permuted` is set, the encoding shuffled by `perm_seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CrrStatus crr_model_counter(uint32_t k,
                                 uint64_t d,
                                 bool permuted,
                                 uint64_t perm_seed,
                                 struct CrrModel **out);

/**
 * Number of latches, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
uintptr_t crr_model_num_latches(const struct CrrModel *model);

/**
 * Number of primary inputs, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
uintptr_t crr_model_num_inputs(const struct CrrModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void crr_model_free(struct CrrModel *model);

/**
 * Checks the property for `n` transitions. `options` may be null.
 *
 * # Safety
 * `model` must be a live model handle, `options` null or valid, and `out`
 * a valid pointer.
 */
enum CrrStatus crr_check(const struct CrrModel *model,
                         uintptr_t n,
                         const struct CrrOptions *options,
                         struct CrrVerdict **out);

/**
 * Bounded model checking for `n` transitions. `options` may be null.
 *
 * # Safety
 * As for [`crr_check`].
 */
enum CrrStatus crr_bmc(const struct CrrModel *model,
                       uintptr_t n,
                       const struct CrrOptions *options,
                       struct CrrVerdict **out);

/**
 * # Safety
 * `verdict` must be a live verdict handle and `out` a valid pointer.
 */
enum CrrStatus crr_verdict_kind(const struct CrrVerdict *verdict, enum CrrVerdictKind *out);

/**
 * Transitions in the counterexample; 0 when there is none.
 *
 * # Safety
 * `verdict` must be null or a live verdict handle.
 */
uintptr_t crr_verdict_trace_len(const struct CrrVerdict *verdict);

/**
 * The loop index of a `HoldsByLoop` verdict; `InvalidArgument` otherwise.
 *
 * # Safety
 * `verdict` must be a live verdict handle and `out` a valid pointer.
 */
enum CrrStatus crr_verdict_loop_index(const struct CrrVerdict *verdict, uintptr_t *out);

/**
 * The verdict as JSON; free the string with [`crr_string_free`].
 *
 * # Safety
 * `verdict` must be a live verdict handle and `out` a valid pointer.
 */
enum CrrStatus crr_verdict_to_json(const struct CrrVerdict *verdict, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void crr_string_free(char *s);

/**
 * # Safety
 * `verdict` must be null or a handle not yet freed.
 */
void crr_verdict_free(struct CrrVerdict *verdict);

/**
 * The last error on this thread, or null. Valid until the next failing
 * call on the same thread.
 */
const char *crr_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRR_H */
