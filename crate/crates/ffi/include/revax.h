/* C interface to the revax epidemic-modeling toolkit. */

#ifndef REVAX_H
#define REVAX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes: 0 is success, anything else matches the CLI exit code of
 * the same failure category.
 */
typedef enum RevaxStatus {
  REVAX_STATUS_OK = 0,
  /**
   * Null pointer or otherwise unusable argument.
   */
  REVAX_STATUS_BAD_ARGUMENT = 1,
  REVAX_STATUS_CONFIG = 3,
  REVAX_STATUS_SCHEMA = 4,
  REVAX_STATUS_PARSE = 5,
  REVAX_STATUS_VALIDATION = 6,
  REVAX_STATUS_MODEL = 7,
  REVAX_STATUS_INSTABILITY = 8,
  REVAX_STATUS_INIT = 9,
  REVAX_STATUS_STAT = 10,
  REVAX_STATUS_EVIDENCE = 11,
  REVAX_STATUS_IO = 12,
} RevaxStatus;

/**
 * Opaque study configuration.
 */
typedef struct RevaxConfig RevaxConfig;

/**
 * Opaque posterior draw matrix.
 */
typedef struct RevaxDraws RevaxDraws;

/**
 * Opaque observation series.
 */
typedef struct RevaxObservations RevaxObservations;

/**
 * Opaque daily mean trajectory.
 */
typedef struct RevaxTrajectory RevaxTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *revax_last_error_message(void);

/**
 * Built-in study defaults for model 1 or 2.
 */
struct RevaxConfig *revax_config_default(int model);

/**
 * Load a TOML study config.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct RevaxConfig *revax_config_load(const char *path);

/**
 * Resolved config echo as TOML; free with [`revax_string_free`].
 *
 * # Safety
 * `config` must be a live handle from a `revax_config_*` constructor.
 */
char *revax_config_to_toml(const struct RevaxConfig *config);

/**
 * # Safety
 * `config` must come from a `revax_config_*` constructor and not already be
 * freed.
 */
void revax_config_free(struct RevaxConfig *config);

/**
 * # Safety
 * `s` must come from a revax function returning `*mut c_char`.
 */
void revax_string_free(char *s);

/**
 * Load an observations CSV (blank cells are masked days).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct RevaxObservations *revax_observations_load(const char *path);

/**
 * Number of days covered (horizon + 1), or -1 on a null handle.
 *
 * # Safety
 * `obs` must be a live handle from [`revax_observations_load`].
 */
int revax_observations_n_days(const struct RevaxObservations *obs);

/**
 * # Safety
 * `obs` must come from [`revax_observations_load`] and not already be freed.
 */
void revax_observations_free(struct RevaxObservations *obs);

/**
 * Integrate the config's parameter set under its fitted vaccination policy.
 *
 * # Safety
 * `config` must be a live handle from a `revax_config_*` constructor.
 */
struct RevaxTrajectory *revax_integrate(const struct RevaxConfig *config);

/**
 * # Safety
 * `traj` must be a live handle from [`revax_integrate`].
 */
int revax_trajectory_n_days(const struct RevaxTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle from [`revax_integrate`].
 */
int revax_trajectory_n_compartments(const struct RevaxTrajectory *traj);

/**
 * Mean occupancy of one compartment (state order) at an integer day;
 * NaN on bad indices.
 *
 * # Safety
 * `traj` must be a live handle from [`revax_integrate`].
 */
double revax_trajectory_value(const struct RevaxTrajectory *traj, int day, int compartment);

/**
 * # Safety
 * `traj` must come from [`revax_integrate`] and not already be freed.
 */
void revax_trajectory_free(struct RevaxTrajectory *traj);

/**
 * Run the configured Metropolis-Hastings fit. Blocking; may take minutes
 * at production draw counts.
 *
 * # Safety
 * `config` and `obs` must be live handles.
 */
struct RevaxDraws *revax_fit(const struct RevaxConfig *config, const struct RevaxObservations *obs);

/**
 * # Safety
 * `draws` must be a live handle from [`revax_fit`] or [`revax_draws_load`].
 */
int revax_draws_n(const struct RevaxDraws *draws);

/**
 * Persist draws as CSV (one row per draw, all parameters, log posterior).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
enum RevaxStatus revax_draws_save(const struct RevaxDraws *draws, const char *path);

/**
 * Reload draws saved by [`revax_draws_save`]; the config supplies the
 * parameter layout.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct RevaxDraws *revax_draws_load(const char *path, const struct RevaxConfig *config);

/**
 * # Safety
 * `draws` must come from [`revax_fit`] or [`revax_draws_load`] and not
 * already be freed.
 */
void revax_draws_free(struct RevaxDraws *draws);

/**
 * Pooled pseudo-R^2 of the posterior-median trajectory against the data.
 *
 * # Safety
 * All handles must be live; `out` must be writable.
 */
enum RevaxStatus revax_pseudo_r2(const struct RevaxConfig *config,
                                 const struct RevaxDraws *draws,
                                 const struct RevaxObservations *obs,
                                 double *out);

/**
 * Run one canonical scenario (1-6) over the draws and write the per-draw
 * summary CSV to `out_csv`.
 *
 * # Safety
 * `out_csv` must be a valid NUL-terminated string.
 */
enum RevaxStatus revax_scenario_run(const struct RevaxConfig *config,
                                    const struct RevaxDraws *draws,
                                    int scenario_id,
                                    double threshold,
                                    const char *out_csv);

/**
 * Prior-predictive Monte Carlo log marginal likelihood of the configured
 * model on the observations.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum RevaxStatus revax_log_marginal_likelihood(const struct RevaxConfig *config,
                                               const struct RevaxObservations *obs,
                                               double *out);

/**
 * `exp(log_ml_1 - log_ml_2)`.
 */
double revax_bayes_factor(double log_ml_1, double log_ml_2);

/**
 * Squared Hellinger distance between two sample sets, KDE-smoothed on a
 * shared grid (`grid_points` <= 0 selects the default resolution).
 *
 * # Safety
 * `a` and `b` must point to `n_a` and `n_b` readable doubles.
 */
enum RevaxStatus revax_hellinger(const double *a,
                                 int n_a,
                                 const double *b,
                                 int n_b,
                                 int grid_points,
                                 double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* REVAX_H */
