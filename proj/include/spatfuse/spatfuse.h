#ifndef SPATFUSE_SPATFUSE_H
#define SPATFUSE_SPATFUSE_H

/* C interface to the spatfuse spatial-econometrics engine.
 *
 * A run handle wraps one JSON configuration. Stages execute the workflow
 * fuse -> weights -> fit -> diagnose -> cv -> report (plus the two sweeps)
 * and write artifacts into the configured output directory. All functions
 * return sf_status; on failure the handle stores a human-readable message
 * retrievable with sf_run_last_error. Status codes double as the CLI exit
 * codes for config/data/numeric failures.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERROR_INTERNAL = 1,
  SF_ERROR_CONFIG = 2,
  SF_ERROR_DATA = 3,
  SF_ERROR_NUMERIC = 4,
  SF_ERROR_ARGUMENT = 5
} sf_status;

typedef struct sf_run sf_run;

const char* sf_version(void);

/* Creates a handle and loads the JSON config. On a load failure the handle
 * is still returned (close it as usual) with the error message stored. */
sf_status sf_run_open(const char* config_path, sf_run** out_run);
void sf_run_close(sf_run* run);

const char* sf_run_last_error(const sf_run* run);
const char* sf_run_output_dir(const sf_run* run);

/* Overrides; each invalidates any in-memory stage results. */
sf_status sf_run_set_output_dir(sf_run* run, const char* dir);
sf_status sf_run_set_seed(sf_run* run, uint64_t seed);
sf_status sf_run_set_threads(sf_run* run, int threads);
sf_status sf_run_set_format(sf_run* run, const char* format); /* text|json|both */

sf_status sf_run_validate(sf_run* run);

/* stage: validate, fuse, weights, fit, diagnose, cv, sweep-radius,
 * sweep-threshold, report, all. Prerequisite stages run automatically. */
sf_status sf_run_stage(sf_run* run, const char* stage);

/* Stateless helpers over plain arrays. */
sf_status sf_haversine_miles(double lon1, double lat1, double lon2,
                             double lat2, double* out_miles);

/* Moran's I over an edge list of 0-based zone indices. out_p_permutation
 * may be NULL; it receives NaN when permutations == 0. */
sf_status sf_morans_i(int n, const double* values, int n_edges,
                      const int* edge_i, const int* edge_j,
                      const double* edge_weight, int permutations,
                      uint64_t seed, double* out_i,
                      double* out_p_permutation);

sf_status sf_boxcox_lambda_mle(int n, const double* values, double offset,
                               double* out_lambda);

sf_status sf_count_within_radius(int n_centroids, const double* centroid_lon,
                                 const double* centroid_lat, int n_stations,
                                 const double* station_lon,
                                 const double* station_lat,
                                 double radius_miles, int* out_counts);

#ifdef __cplusplus
}
#endif

#endif /* SPATFUSE_SPATFUSE_H */
