#include "spatfuse/spatfuse.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/diagnostics.hpp"
#include "core/errors.hpp"
#include "core/geo.hpp"
#include "core/pipeline.hpp"
#include "core/spatial_index.hpp"
#include "core/transforms.hpp"

struct sf_run {
  spatfuse::RunConfig config;
  bool config_loaded = false;
  std::string format = "both";
  std::string last_error;
  std::unique_ptr<spatfuse::Pipeline> pipeline;
};

namespace {

constexpr const char* kVersion = "0.1.0";

sf_status store_error(sf_run* run, sf_status status, const char* what) {
  if (run != nullptr) run->last_error = what;
  return status;
}

// Maps the exception taxonomy onto status codes; runs body() under it.
template <typename Fn>
sf_status guarded(sf_run* run, Fn&& body) {
  try {
    body();
    if (run != nullptr) run->last_error.clear();
    return SF_OK;
  } catch (const spatfuse::ConfigError& e) {
    return store_error(run, SF_ERROR_CONFIG, e.what());
  } catch (const spatfuse::DataError& e) {
    return store_error(run, SF_ERROR_DATA, e.what());
  } catch (const spatfuse::NumericError& e) {
    return store_error(run, SF_ERROR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return store_error(run, SF_ERROR_INTERNAL, e.what());
  } catch (...) {
    return store_error(run, SF_ERROR_INTERNAL, "unknown error");
  }
}

void invalidate(sf_run* run) { run->pipeline.reset(); }

}  // namespace

extern "C" {

const char* sf_version(void) { return kVersion; }

sf_status sf_run_open(const char* config_path, sf_run** out_run) {
  if (out_run == nullptr) return SF_ERROR_ARGUMENT;
  *out_run = nullptr;
  if (config_path == nullptr) return SF_ERROR_ARGUMENT;
  auto run = std::make_unique<sf_run>();
  sf_status status = guarded(run.get(), [&] {
    run->config = spatfuse::load_config(config_path);
    run->config_loaded = true;
  });
  *out_run = run.release();
  return status;
}

void sf_run_close(sf_run* run) { delete run; }

const char* sf_run_last_error(const sf_run* run) {
  return run == nullptr ? "" : run->last_error.c_str();
}

const char* sf_run_output_dir(const sf_run* run) {
  return run == nullptr ? "" : run->config.output_dir.c_str();
}

sf_status sf_run_set_output_dir(sf_run* run, const char* dir) {
  if (run == nullptr || dir == nullptr) return SF_ERROR_ARGUMENT;
  run->config.output_dir = dir;
  invalidate(run);
  return SF_OK;
}

sf_status sf_run_set_seed(sf_run* run, uint64_t seed) {
  if (run == nullptr) return SF_ERROR_ARGUMENT;
  spatfuse::apply_seed_override(run->config, seed);
  invalidate(run);
  return SF_OK;
}

sf_status sf_run_set_threads(sf_run* run, int threads) {
  if (run == nullptr) return SF_ERROR_ARGUMENT;
  if (threads < 0) return store_error(run, SF_ERROR_CONFIG,
                                      "threads must be zero (auto) or positive");
  run->config.threads = threads;
  invalidate(run);
  return SF_OK;
}

sf_status sf_run_set_format(sf_run* run, const char* format) {
  if (run == nullptr || format == nullptr) return SF_ERROR_ARGUMENT;
  std::string f = format;
  if (f != "text" && f != "json" && f != "both") {
    return store_error(run, SF_ERROR_CONFIG,
                       "format must be text, json, or both");
  }
  run->format = f;
  invalidate(run);
  return SF_OK;
}

sf_status sf_run_validate(sf_run* run) {
  if (run == nullptr) return SF_ERROR_ARGUMENT;
  if (!run->config_loaded) return SF_ERROR_CONFIG;
  return guarded(run, [&] { spatfuse::validate_config(run->config); });
}

sf_status sf_run_stage(sf_run* run, const char* stage) {
  if (run == nullptr || stage == nullptr) return SF_ERROR_ARGUMENT;
  if (!run->config_loaded) return SF_ERROR_CONFIG;
  return guarded(run, [&] {
    spatfuse::Stage s = spatfuse::stage_from_name(stage);
    if (s == spatfuse::Stage::validate) {
      spatfuse::validate_config(run->config);
      return;
    }
    if (!run->pipeline) {
      spatfuse::validate_config(run->config);
      run->pipeline = std::make_unique<spatfuse::Pipeline>(run->config);
      run->pipeline->set_format(run->format);
    }
    run->pipeline->execute(s);
  });
}

sf_status sf_haversine_miles(double lon1, double lat1, double lon2,
                             double lat2, double* out_miles) {
  if (out_miles == nullptr) return SF_ERROR_ARGUMENT;
  return guarded(nullptr, [&] {
    *out_miles = spatfuse::haversine_miles({lon1, lat1}, {lon2, lat2});
  });
}

sf_status sf_morans_i(int n, const double* values, int n_edges,
                      const int* edge_i, const int* edge_j,
                      const double* edge_weight, int permutations,
                      uint64_t seed, double* out_i,
                      double* out_p_permutation) {
  if (values == nullptr || out_i == nullptr || n < 1) {
    return SF_ERROR_ARGUMENT;
  }
  if (n_edges > 0 &&
      (edge_i == nullptr || edge_j == nullptr || edge_weight == nullptr)) {
    return SF_ERROR_ARGUMENT;
  }
  return guarded(nullptr, [&] {
    spatfuse::WeightMatrix w;
    w.n = n;
    w.standardized = false;
    w.rows.assign(static_cast<std::size_t>(n), {});
    w.zone_ids.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w.zone_ids.push_back(std::to_string(i));
    for (int e = 0; e < n_edges; ++e) {
      int i = edge_i[e], j = edge_j[e];
      if (i < 0 || i >= n || j < 0 || j >= n) {
        throw spatfuse::DataError("edge " + std::to_string(e) +
                                  " references a zone outside [0, n)");
      }
      if (i == j) {
        throw spatfuse::DataError("edge " + std::to_string(e) +
                                  " is a self-weight");
      }
      if (!(edge_weight[e] > 0.0)) {
        throw spatfuse::DataError("edge " + std::to_string(e) +
                                  " has a nonpositive weight");
      }
      w.rows[static_cast<std::size_t>(i)].emplace_back(j, edge_weight[e]);
    }
    for (auto& row : w.rows) std::sort(row.begin(), row.end());
    Eigen::Map<const Eigen::VectorXd> v(values, n);
    spatfuse::MoranResult r =
        spatfuse::morans_i(Eigen::VectorXd(v), w, permutations, seed, 1);
    *out_i = r.i;
    if (out_p_permutation != nullptr) *out_p_permutation = r.p_permutation;
  });
}

sf_status sf_boxcox_lambda_mle(int n, const double* values, double offset,
                               double* out_lambda) {
  if (values == nullptr || out_lambda == nullptr || n < 1) {
    return SF_ERROR_ARGUMENT;
  }
  return guarded(nullptr, [&] {
    std::vector<double> v(values, values + n);
    *out_lambda = spatfuse::boxcox_mle(v, offset, nullptr);
  });
}

sf_status sf_count_within_radius(int n_centroids, const double* centroid_lon,
                                 const double* centroid_lat, int n_stations,
                                 const double* station_lon,
                                 const double* station_lat,
                                 double radius_miles, int* out_counts) {
  if (n_centroids < 0 || n_stations < 0 || out_counts == nullptr) {
    return SF_ERROR_ARGUMENT;
  }
  if (n_centroids > 0 && (centroid_lon == nullptr || centroid_lat == nullptr)) {
    return SF_ERROR_ARGUMENT;
  }
  if (n_stations > 0 && (station_lon == nullptr || station_lat == nullptr)) {
    return SF_ERROR_ARGUMENT;
  }
  return guarded(nullptr, [&] {
    std::vector<spatfuse::GeoPoint> centroids, stations;
    centroids.reserve(static_cast<std::size_t>(n_centroids));
    for (int i = 0; i < n_centroids; ++i) {
      centroids.push_back({centroid_lon[i], centroid_lat[i]});
    }
    stations.reserve(static_cast<std::size_t>(n_stations));
    for (int i = 0; i < n_stations; ++i) {
      stations.push_back({station_lon[i], station_lat[i]});
    }
    std::vector<int> counts =
        spatfuse::count_within_radius(centroids, stations, radius_miles);
    std::copy(counts.begin(), counts.end(), out_counts);
  });
}

}  // extern "C"
