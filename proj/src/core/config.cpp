#include "core/config.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/io.hpp"
#include "core/util.hpp"

namespace spatfuse {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
  }
}

std::string resolve_path(const std::filesystem::path& base,
                         const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return fp.lexically_normal().string();
  return (base / fp).lexically_normal().string();
}

double require_finite(const json& v, const std::string& key) {
  if (!v.is_number()) {
    throw ConfigError("config key '" + key + "' must be a number");
  }
  double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ConfigError("config key '" + key + "' must be finite");
  }
  return d;
}

std::uint64_t require_seed(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError("config key '" + key +
                      "' must be a nonnegative integer seed");
  }
  if (v.is_number_integer() && v.get<long long>() < 0) {
    throw ConfigError("config key '" + key + "' must be nonnegative");
  }
  return v.get<std::uint64_t>();
}

std::string require_string(const json& v, const std::string& key) {
  if (!v.is_string()) {
    throw ConfigError("config key '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config '" + path + "' must be a JSON object");
  }

  RunConfig cfg;
  cfg.config_path = path;
  cfg.config_hash = fnv1a64(text);
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  reject_unknown_keys(
      root,
      {"output_dir", "id_property", "polygons", "stations", "crosswalk",
       "tables", "target", "predictors", "station_column", "station_radius",
       "crosswalk_threshold", "boxcox_offset", "standardize_weights", "radii",
       "thresholds", "gwr", "cv", "moran", "threads"},
      "the top level");

  if (root.contains("output_dir")) {
    cfg.output_dir = resolve_path(base, require_string(root["output_dir"],
                                                       "output_dir"));
  } else {
    cfg.output_dir = resolve_path(base, "out");
  }
  if (root.contains("id_property")) {
    cfg.id_property = require_string(root["id_property"], "id_property");
  }
  if (root.contains("polygons")) {
    cfg.polygons_path = resolve_path(base, require_string(root["polygons"],
                                                          "polygons"));
  }
  if (root.contains("stations")) {
    cfg.stations_path = resolve_path(base, require_string(root["stations"],
                                                          "stations"));
  }
  if (root.contains("crosswalk")) {
    cfg.crosswalk_path = resolve_path(base, require_string(root["crosswalk"],
                                                           "crosswalk"));
  }
  if (root.contains("tables")) {
    if (!root["tables"].is_array()) {
      throw ConfigError("config key 'tables' must be an array");
    }
    for (const auto& t : root["tables"]) {
      if (!t.is_object()) {
        throw ConfigError("each entry of 'tables' must be an object");
      }
      reject_unknown_keys(t, {"path", "level", "name", "population_column"},
                          "a tables entry");
      if (!t.contains("path")) {
        throw ConfigError("a tables entry lacks 'path'");
      }
      TableInput ti;
      ti.path = resolve_path(base, require_string(t["path"], "tables.path"));
      ti.level = geo_level_from_name(
          t.contains("level") ? require_string(t["level"], "tables.level")
                              : "zcta");
      ti.name = t.contains("name") ? require_string(t["name"], "tables.name")
                                   : std::filesystem::path(ti.path)
                                         .stem()
                                         .string();
      if (t.contains("population_column")) {
        ti.population_column =
            require_string(t["population_column"], "tables.population_column");
      }
      cfg.tables.push_back(std::move(ti));
    }
  }
  if (root.contains("target")) {
    cfg.target = require_string(root["target"], "target");
  }
  if (root.contains("predictors")) {
    if (!root["predictors"].is_array()) {
      throw ConfigError("config key 'predictors' must be an array of names");
    }
    cfg.predictors.clear();
    for (const auto& p : root["predictors"]) {
      cfg.predictors.push_back(require_string(p, "predictors"));
    }
  }
  if (root.contains("station_column")) {
    cfg.station_column = require_string(root["station_column"],
                                        "station_column");
  }
  if (root.contains("station_radius")) {
    cfg.station_radius = require_finite(root["station_radius"],
                                        "station_radius");
  }
  if (root.contains("crosswalk_threshold")) {
    cfg.crosswalk_threshold = require_finite(root["crosswalk_threshold"],
                                             "crosswalk_threshold");
  }
  if (root.contains("boxcox_offset")) {
    cfg.boxcox_offset = require_finite(root["boxcox_offset"], "boxcox_offset");
  }
  if (root.contains("standardize_weights")) {
    if (!root["standardize_weights"].is_boolean()) {
      throw ConfigError("config key 'standardize_weights' must be a boolean");
    }
    cfg.standardize_weights = root["standardize_weights"].get<bool>();
  }
  if (root.contains("radii")) {
    if (!root["radii"].is_array() || root["radii"].empty()) {
      throw ConfigError("config key 'radii' must be a nonempty array");
    }
    cfg.radii.clear();
    for (const auto& r : root["radii"]) {
      cfg.radii.push_back(require_finite(r, "radii"));
    }
  }
  if (root.contains("thresholds")) {
    if (!root["thresholds"].is_array() || root["thresholds"].empty()) {
      throw ConfigError("config key 'thresholds' must be a nonempty array");
    }
    cfg.thresholds.clear();
    for (const auto& t : root["thresholds"]) {
      cfg.thresholds.push_back(require_finite(t, "thresholds"));
    }
  }
  if (root.contains("gwr")) {
    const json& g = root["gwr"];
    if (!g.is_object()) throw ConfigError("config key 'gwr' must be an object");
    reject_unknown_keys(g, {"kernel", "adaptive", "bandwidth"}, "'gwr'");
    if (g.contains("kernel")) {
      cfg.gwr.kernel =
          kernel_kind_from_name(require_string(g["kernel"], "gwr.kernel"));
    }
    if (g.contains("adaptive")) {
      if (!g["adaptive"].is_boolean()) {
        throw ConfigError("config key 'gwr.adaptive' must be a boolean");
      }
      cfg.gwr.adaptive = g["adaptive"].get<bool>();
    }
    if (g.contains("bandwidth")) {
      cfg.gwr.bandwidth = require_finite(g["bandwidth"], "gwr.bandwidth");
    }
  }
  if (root.contains("cv")) {
    const json& c = root["cv"];
    if (!c.is_object()) throw ConfigError("config key 'cv' must be an object");
    reject_unknown_keys(c, {"folds", "seed"}, "'cv'");
    if (c.contains("folds")) {
      cfg.cv_folds = static_cast<int>(require_finite(c["folds"], "cv.folds"));
    }
    if (c.contains("seed")) {
      cfg.cv_seed = require_seed(c["seed"], "cv.seed");
      cfg.has_cv_seed = true;
    }
  }
  if (root.contains("moran")) {
    const json& m = root["moran"];
    if (!m.is_object()) {
      throw ConfigError("config key 'moran' must be an object");
    }
    reject_unknown_keys(m, {"permutations", "seed"}, "'moran'");
    if (m.contains("permutations")) {
      cfg.permutations = static_cast<int>(
          require_finite(m["permutations"], "moran.permutations"));
    }
    if (m.contains("seed")) {
      cfg.moran_seed = require_seed(m["seed"], "moran.seed");
      cfg.has_moran_seed = true;
    }
  }
  if (root.contains("threads")) {
    cfg.threads = static_cast<int>(require_finite(root["threads"], "threads"));
  }
  return cfg;
}

void apply_seed_override(RunConfig& config, std::uint64_t seed) {
  config.cv_seed = derive_seed(seed, 1);
  config.has_cv_seed = true;
  config.moran_seed = derive_seed(seed, 2);
  config.has_moran_seed = true;
}

void validate_config(const RunConfig& config) {
  auto require_exists = [](const std::string& path, const std::string& what) {
    if (path.empty()) {
      throw ConfigError("config is missing required path '" + what + "'");
    }
    if (!std::filesystem::exists(path)) {
      throw ConfigError("config " + what + " path '" + path +
                        "' does not exist");
    }
  };
  require_exists(config.polygons_path, "polygons");
  if (config.tables.empty()) {
    throw ConfigError("config must list at least one table");
  }
  bool any_non_zcta = false;
  for (const auto& t : config.tables) {
    require_exists(t.path, "tables");
    if (t.level != GeoLevel::zcta) {
      any_non_zcta = true;
      if (t.population_column.empty()) {
        throw ConfigError("table '" + t.name + "' at " +
                          geo_level_name(t.level) +
                          " level needs a population_column for aggregation");
      }
    }
  }
  if (any_non_zcta) {
    require_exists(config.crosswalk_path, "crosswalk");
  }
  if (config.target.empty()) {
    throw ConfigError("config must name a target column");
  }
  if (config.predictors.empty()) {
    throw ConfigError("config must list at least one predictor");
  }
  if (!config.station_column.empty()) {
    bool found = false;
    for (const auto& p : config.predictors) {
      found = found || p == config.station_column;
    }
    if (!found) {
      throw ConfigError("station_column '" + config.station_column +
                        "' is not among the predictors");
    }
    require_exists(config.stations_path, "stations");
    if (!(config.station_radius > 0.0)) {
      throw ConfigError("station_radius must be positive");
    }
  }
  if (config.crosswalk_threshold < 0.0 || config.crosswalk_threshold > 1.0) {
    throw ConfigError("crosswalk_threshold must lie in [0, 1]");
  }
  for (double r : config.radii) {
    if (!(r > 0.0)) throw ConfigError("radii must be positive");
  }
  for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
    double v = config.thresholds[t];
    if (v < 0.0 || v > 1.0) {
      throw ConfigError("thresholds must lie in [0, 1]");
    }
    if (t > 0 && v < config.thresholds[t - 1]) {
      throw ConfigError("thresholds must be sorted ascending");
    }
  }
  if (config.gwr.bandwidth < 0.0) {
    throw ConfigError("gwr.bandwidth must be zero (automatic) or positive");
  }
  if (config.gwr.adaptive && config.gwr.bandwidth > 0.0 &&
      config.gwr.bandwidth !=
          std::floor(config.gwr.bandwidth)) {
    throw ConfigError("adaptive gwr.bandwidth must be a whole neighbor count");
  }
  if (config.cv_folds < 2) {
    throw ConfigError("cv.folds must be at least 2");
  }
  if (!config.has_cv_seed) {
    throw ConfigError("cv.seed is required: fold assignment is stochastic; "
                      "set it in the config or pass --seed");
  }
  if (config.permutations < 0) {
    throw ConfigError("moran.permutations must be nonnegative");
  }
  if (config.permutations > 0 && !config.has_moran_seed) {
    throw ConfigError("moran.seed is required when permutations > 0; set it "
                      "in the config or pass --seed");
  }
  if (config.threads < 0) {
    throw ConfigError("threads must be zero (auto) or positive");
  }
}

}  // namespace spatfuse
