#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/fusion.hpp"
#include "core/gwr.hpp"

namespace spatfuse {

struct TableInput {
  std::string path;
  GeoLevel level = GeoLevel::zcta;
  std::string name;
  std::string population_column;
};

struct RunConfig {
  std::string config_path;
  std::string output_dir = "out";
  std::string id_property = "id";
  std::string polygons_path;
  std::string stations_path;
  std::string crosswalk_path;
  std::vector<TableInput> tables;
  std::string target;
  std::vector<std::string> predictors;
  std::string station_column;
  double station_radius = 10.0;
  double crosswalk_threshold = 0.2;
  double boxcox_offset = 1.0;
  bool standardize_weights = true;
  std::vector<double> radii = {5.0, 10.0, 25.0, 50.0, 75.0, 100.0};
  std::vector<double> thresholds = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6, 0.7, 0.8, 0.9, 1.0};
  GwrSettings gwr;
  int cv_folds = 5;
  bool has_cv_seed = false;
  std::uint64_t cv_seed = 0;
  int permutations = 999;
  bool has_moran_seed = false;
  std::uint64_t moran_seed = 0;
  int threads = 0;
  std::uint64_t config_hash = 0;
};

// Parses the JSON config, resolving relative paths against the config
// file's directory and hashing the raw bytes. Unknown keys are rejected.
RunConfig load_config(const std::string& path);

// Replaces both stage seeds with values derived from one master seed.
void apply_seed_override(RunConfig& config, std::uint64_t seed);

// Semantic checks: referenced files exist, ranges are sane, and seeds are
// present for the stochastic stages.
void validate_config(const RunConfig& config);

}  // namespace spatfuse
