#ifndef ZENO_WITNESS_H
#define ZENO_WITNESS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `ZW_STATUS_OK` is zero; everything else is a failure.
 */
typedef enum ZwStatus {
  ZW_STATUS_OK = 0,
  ZW_STATUS_NULL_POINTER = 1,
  ZW_STATUS_INVALID_ARGUMENT = 2,
  ZW_STATUS_INVALID_MODEL = 3,
  ZW_STATUS_INVALID_DECOMPOSITION = 4,
  ZW_STATUS_INVALID_DESIGN = 5,
  ZW_STATUS_ILL_CONDITIONED = 6,
  ZW_STATUS_INCONSISTENT = 7,
  ZW_STATUS_DIMENSION_MISMATCH = 8,
  ZW_STATUS_OUT_OF_RANGE = 9,
  ZW_STATUS_PANIC = 10,
} ZwStatus;

/**
 * How protocol rates are obtained in [`zw_run_pipeline`].
 */
typedef enum ZwRateMode {
  ZW_RATE_MODE_EXACT = 0,
  ZW_RATE_MODE_FINITE_DIFFERENCE = 1,
  ZW_RATE_MODE_SMALLTIME = 2,
  ZW_RATE_MODE_SAMPLED = 3,
} ZwRateMode;

/**
 * Partition of the basis into measured blocks.
 */
typedef struct ZwDecomposition ZwDecomposition;

/**
 * Open quantum system `(H, {L_a})`.
 */
typedef struct ZwModel ZwModel;

/**
 * Witness report from the oracle or the simulated pipeline.
 */
typedef struct ZwReport ZwReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null if none occurred.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *zw_last_error(void);

/**
 * Build a model from row-major `dim × dim` arrays. `h_im` and `jumps_im` may be
 * null for real matrices; `jumps_re`/`jumps_im` hold `n_jumps` matrices back to back.
 *
 * # Safety
 * Non-null array pointers must reference the stated number of doubles.
 */
enum ZwStatus zw_model_new(size_t dim,
                           const double *h_re,
                           const double *h_im,
                           size_t n_jumps,
                           const double *jumps_re,
                           const double *jumps_im,
                           struct ZwModel **out);

/**
 * Parse a model from its JSON form
 * (`{"dim": d, "hamiltonian": [[[re, im], ...], ...], "jumps": [...]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string.
 */
enum ZwStatus zw_model_from_json(const char *json, struct ZwModel **out);

/**
 * Driven qubit `H = (Δ/2)(cosθ·σ_z + sinθ·σ_x)` with decay `√γ·|0⟩⟨1|`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ZwStatus zw_model_qubit(double delta, double theta, double gamma, struct ZwModel **out);

/**
 * Build a model and decomposition from a model-family spec, e.g.
 * `{"family": "rollercoaster", "params": {"n": 5, "j": 2.0}, "decomposition": "edges"}`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; both outputs must be writable.
 */
enum ZwStatus zw_model_from_spec(const char *spec,
                                 struct ZwModel **model_out,
                                 struct ZwDecomposition **decomp_out);

/**
 * Hilbert-space dimension of a model, or 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t zw_model_dim(const struct ZwModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void zw_model_free(struct ZwModel *model);

/**
 * Decomposition from a block label per basis state (`labels[a]` is the
 * 0-based block containing state `a`). Labels must cover `0..n` without gaps.
 *
 * # Safety
 * `labels` must reference `dim` entries.
 */
enum ZwStatus zw_decomposition_new(size_t dim, const size_t *labels, struct ZwDecomposition **out);

/**
 * Parse a decomposition from `{"blocks": [[1], [2, 3]]}` (1-based indices).
 *
 * # Safety
 * `json` must be a NUL-terminated string.
 */
enum ZwStatus zw_decomposition_from_json(const char *json, struct ZwDecomposition **out);

/**
 * One block per basis state.
 *
 * # Safety
 * `out` must be writable.
 */
enum ZwStatus zw_decomposition_single_site(size_t dim, struct ZwDecomposition **out);

/**
 * Number of blocks, or 0 for null.
 *
 * # Safety
 * `decomp` must be null or a live handle.
 */
size_t zw_decomposition_blocks(const struct ZwDecomposition *decomp);

/**
 * # Safety
 * `decomp` must be null or a handle not yet freed.
 */
void zw_decomposition_free(struct ZwDecomposition *decomp);

/**
 * Spectral spread `λ_max(H) − λ_min(H)`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum ZwStatus zw_spectral_spread(const struct ZwModel *model, double *out);

/**
 * Noise-compatibility residual of the model's jumps with the decomposition.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum ZwStatus zw_compatibility_residual(const struct ZwModel *model,
                                        const struct ZwDecomposition *decomp,
                                        double *out);

/**
 * Closed-form susceptibilities and witness computed directly from `H`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum ZwStatus zw_oracle_report(const struct ZwModel *model,
                               const struct ZwDecomposition *decomp,
                               struct ZwReport **out);

/**
 * Simulate the protocol with an automatic design and extract the witness.
 * `t_norm <= 0` uses the default probe time; `shots == 0` uses the default
 * shot count in sampled mode and is ignored otherwise.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum ZwStatus zw_run_pipeline(const struct ZwModel *model,
                              const struct ZwDecomposition *decomp,
                              enum ZwRateMode mode,
                              double t_norm,
                              uint64_t shots,
                              uint64_t seed,
                              struct ZwReport **out);

/**
 * Number of blocks in the report, or 0 for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t zw_report_n(const struct ZwReport *report);

/**
 * Coherence witness `Ω`.
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum ZwStatus zw_report_omega(const struct ZwReport *report, double *out);

/**
 * Coupling norm `‖H_ij‖₂` (0-based block indices).
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum ZwStatus zw_report_coupling_norm(const struct ZwReport *report,
                                      size_t i,
                                      size_t j,
                                      double *out);

/**
 * Entry `C_ij` of the witness matrix (0-based).
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum ZwStatus zw_report_c_matrix(const struct ZwReport *report, size_t i, size_t j, double *out);

/**
 * Full report as JSON. Release the string with [`zw_string_free`].
 *
 * # Safety
 * `report` must be live; `out` writable.
 */
enum ZwStatus zw_report_to_json(const struct ZwReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void zw_report_free(struct ZwReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void zw_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZENO_WITNESS_H */
