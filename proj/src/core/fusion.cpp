#include "core/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/spatial_index.hpp"

namespace spatfuse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_crosswalk_rows(const std::vector<CrosswalkRow>& rows) {
  std::map<std::string, double> totals;
  for (const auto& r : rows) {
    if (r.tract_id.empty() || r.zcta_id.empty()) {
      throw DataError("crosswalk row has an empty tract or zcta id");
    }
    if (!std::isfinite(r.population_share) || r.population_share < 0.0 ||
        r.population_share > 1.0) {
      throw DataError("crosswalk share for tract '" + r.tract_id +
                      "' is outside [0, 1]");
    }
    totals[r.tract_id] += r.population_share;
  }
  for (const auto& [tract, total] : totals) {
    if (total > 1.0 + 1e-6) {
      throw DataError("crosswalk shares for tract '" + tract +
                      "' sum to " + std::to_string(total) + ", above 1");
    }
  }
}

}  // namespace

CrosswalkAssignment crosswalk_assign(const std::vector<CrosswalkRow>& rows,
                                     double threshold) {
  if (!std::isfinite(threshold) || threshold < 0.0 || threshold > 1.0) {
    throw ConfigError("crosswalk threshold must lie in [0, 1]");
  }
  validate_crosswalk_rows(rows);
  // Merge duplicate (tract, zcta) pairs by summing their shares.
  std::map<std::string, std::map<std::string, double>> by_tract;
  for (const auto& r : rows) {
    by_tract[r.tract_id][r.zcta_id] += r.population_share;
  }
  CrosswalkAssignment out;
  for (const auto& [tract, shares] : by_tract) {
    std::string best_zcta;
    double best_share = -1.0;
    for (const auto& [zcta, share] : shares) {
      if (share > best_share) {  // map order breaks ties lexicographically
        best_share = share;
        best_zcta = zcta;
      }
    }
    if (best_share >= threshold) {
      out.assigned.emplace(tract, best_zcta);
    } else {
      out.unmatched.push_back(tract);
    }
  }
  return out;
}

std::vector<ThresholdCount> threshold_sensitivity(
    const std::vector<CrosswalkRow>& rows,
    const std::vector<double>& thresholds) {
  for (std::size_t t = 1; t < thresholds.size(); ++t) {
    if (thresholds[t] < thresholds[t - 1]) {
      throw ConfigError("threshold list must be sorted ascending");
    }
  }
  std::vector<ThresholdCount> out;
  out.reserve(thresholds.size());
  for (double threshold : thresholds) {
    CrosswalkAssignment a = crosswalk_assign(rows, threshold);
    std::set<std::string> zctas;
    for (const auto& [tract, zcta] : a.assigned) zctas.insert(zcta);
    out.push_back({threshold, static_cast<int>(zctas.size())});
  }
  return out;
}

std::string geo_level_name(GeoLevel level) {
  switch (level) {
    case GeoLevel::zcta: return "zcta";
    case GeoLevel::tract: return "tract";
    case GeoLevel::cbg: return "cbg";
  }
  return "unknown";
}

GeoLevel geo_level_from_name(const std::string& name) {
  if (name == "zcta") return GeoLevel::zcta;
  if (name == "tract") return GeoLevel::tract;
  if (name == "cbg") return GeoLevel::cbg;
  throw ConfigError("unknown geography level '" + name +
                    "'; expected zcta, tract, or cbg");
}

int GeoTable::column_index(const std::string& column) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == column) return static_cast<int>(j);
  }
  return -1;
}

void validate_geo_table(const GeoTable& table) {
  std::string label = table.name.empty() ? "table" : "table '" + table.name + "'";
  if (table.values.rows() != table.rows() ||
      table.values.cols() != table.cols()) {
    throw DataError(label + " has inconsistent dimensions");
  }
  std::set<std::string> seen_ids(table.ids.begin(), table.ids.end());
  if (static_cast<int>(seen_ids.size()) != table.rows()) {
    throw DataError(label + " has duplicate geographic ids");
  }
  std::set<std::string> seen_cols(table.columns.begin(), table.columns.end());
  if (static_cast<int>(seen_cols.size()) != table.cols()) {
    throw DataError(label + " has duplicate column names");
  }
  if (table.population_column < -1 ||
      table.population_column >= table.cols()) {
    throw DataError(label + " has an out-of-range population column index");
  }
}

AggregationResult aggregate_to_zcta(
    const GeoTable& table, const std::map<std::string, std::string>& assignment,
    const std::map<std::string, double>& population, WarningLog* warnings) {
  validate_geo_table(table);
  if (table.level == GeoLevel::zcta) {
    throw DataError("aggregate_to_zcta: input table is already at zcta level");
  }
  std::unordered_map<std::string, int> row_of;
  for (int i = 0; i < table.rows(); ++i) {
    row_of.emplace(table.ids[static_cast<std::size_t>(i)], i);
  }

  // zcta -> contributing (table row, population weight)
  std::map<std::string, std::vector<std::pair<int, double>>> groups;
  AggregationResult out;
  for (const auto& [tract, zcta] : assignment) {
    auto rit = row_of.find(tract);
    if (rit == row_of.end()) {
      out.unmatched_tracts.push_back(tract);
      continue;
    }
    auto pit = population.find(tract);
    if (pit == population.end() || !std::isfinite(pit->second) ||
        pit->second < 0.0) {
      throw DataError("aggregate_to_zcta: tract '" + tract +
                      "' lacks a valid population weight");
    }
    groups[zcta].emplace_back(rit->second, pit->second);
  }

  GeoTable result;
  result.level = GeoLevel::zcta;
  result.name = table.name;
  result.columns = table.columns;
  result.population_column = table.population_column;
  result.ids.reserve(groups.size());
  for (const auto& [zcta, members] : groups) result.ids.push_back(zcta);
  result.values.resize(static_cast<int>(groups.size()), table.cols());

  int r = 0;
  for (const auto& [zcta, members] : groups) {
    for (int j = 0; j < table.cols(); ++j) {
      if (j == table.population_column) {
        double total = 0.0;
        bool any = false;
        for (const auto& [row, pop] : members) {
          double v = table.values(row, j);
          if (std::isfinite(v)) {
            total += v;
            any = true;
          }
        }
        result.values(r, j) = any ? total : kNaN;
        continue;
      }
      double weight_sum = 0.0, weighted = 0.0, plain = 0.0;
      int finite_count = 0;
      for (const auto& [row, pop] : members) {
        double v = table.values(row, j);
        if (!std::isfinite(v)) continue;
        weight_sum += pop;
        weighted += pop * v;
        plain += v;
        ++finite_count;
      }
      if (finite_count == 0) {
        result.values(r, j) = kNaN;
      } else if (weight_sum > 0.0) {
        result.values(r, j) = weighted / weight_sum;
      } else {
        result.values(r, j) = plain / finite_count;
        if (warnings) {
          warnings->add("aggregate_to_zcta: zero population weight for zcta '" +
                        zcta + "'; unweighted mean used");
        }
      }
    }
    ++r;
  }
  std::sort(out.unmatched_tracts.begin(), out.unmatched_tracts.end());
  out.table = std::move(result);
  return out;
}

AssembledFrame assemble_frame(const std::vector<GeoTable>& tables,
                              const std::string& target_column,
                              const std::vector<std::string>& predictor_columns,
                              const std::vector<ZonePolygon>& polygons,
                              double boxcox_offset, WarningLog* warnings) {
  if (tables.empty()) throw DataError("assemble_frame: no input tables");
  if (predictor_columns.empty()) {
    throw ConfigError("assemble_frame: predictor list is empty");
  }
  for (const auto& t : tables) {
    validate_geo_table(t);
    if (t.level != GeoLevel::zcta) {
      throw DataError("assemble_frame: table '" + t.name +
                      "' is not at zcta level");
    }
  }

  // Resolve each requested column to exactly one (table, column) source.
  auto locate = [&](const std::string& column) {
    std::pair<int, int> hit{-1, -1};
    int count = 0;
    for (std::size_t t = 0; t < tables.size(); ++t) {
      int j = tables[t].column_index(column);
      if (j >= 0) {
        hit = {static_cast<int>(t), j};
        ++count;
      }
    }
    if (count == 0) {
      throw DataError("assemble_frame: column '" + column +
                      "' not found in any table");
    }
    if (count > 1) {
      throw DataError("assemble_frame: column '" + column +
                      "' appears in more than one table");
    }
    return hit;
  };
  std::pair<int, int> target_src = locate(target_column);
  std::vector<std::pair<int, int>> predictor_src;
  for (const auto& c : predictor_columns) {
    if (c == target_column) {
      throw ConfigError("assemble_frame: target column '" + c +
                        "' also listed as a predictor");
    }
    predictor_src.push_back(locate(c));
  }
  std::set<std::string> unique_preds(predictor_columns.begin(),
                                     predictor_columns.end());
  if (unique_preds.size() != predictor_columns.size()) {
    throw ConfigError("assemble_frame: duplicate predictor names");
  }

  // Inner join: ids present in every table, in sorted order.
  std::vector<std::set<std::string>> id_sets;
  for (const auto& t : tables) {
    id_sets.emplace_back(t.ids.begin(), t.ids.end());
  }
  std::vector<std::string> joined;
  for (const auto& id : id_sets[0]) {
    bool in_all = true;
    for (std::size_t t = 1; t < id_sets.size(); ++t) {
      if (!id_sets[t].count(id)) {
        in_all = false;
        break;
      }
    }
    if (in_all) joined.push_back(id);
  }

  std::map<std::string, const ZonePolygon*> poly_of;
  for (const auto& p : polygons) {
    if (!poly_of.emplace(p.zone_id, &p).second) {
      throw DataError("assemble_frame: duplicate polygon for zone '" +
                      p.zone_id + "'");
    }
  }
  for (const auto& id : joined) {
    if (!poly_of.count(id)) {
      throw DataError("assemble_frame: zone '" + id +
                      "' has no polygon geometry");
    }
  }

  std::vector<std::unordered_map<std::string, int>> row_maps(tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    for (int i = 0; i < tables[t].rows(); ++i) {
      row_maps[t].emplace(tables[t].ids[static_cast<std::size_t>(i)], i);
    }
  }
  auto cell = [&](const std::pair<int, int>& src, const std::string& id) {
    int row = row_maps[static_cast<std::size_t>(src.first)].at(id);
    return tables[static_cast<std::size_t>(src.first)].values(row, src.second);
  };

  AssembledFrame out;
  out.report.rows_in = static_cast<int>(joined.size());
  std::vector<std::string> kept;
  std::vector<double> target_vals;
  std::vector<Eigen::RowVectorXd> pred_rows;
  for (const auto& id : joined) {
    double y = cell(target_src, id);
    Eigen::RowVectorXd xr(static_cast<int>(predictor_src.size()));
    bool complete = std::isfinite(y);
    for (std::size_t j = 0; j < predictor_src.size(); ++j) {
      xr(static_cast<int>(j)) = cell(predictor_src[j], id);
      complete = complete && std::isfinite(xr(static_cast<int>(j)));
    }
    if (!complete) {
      ++out.report.rows_dropped_missing;
      continue;
    }
    kept.push_back(id);
    target_vals.push_back(y);
    pred_rows.push_back(xr);
  }
  out.report.rows_out = static_cast<int>(kept.size());
  if (kept.empty()) {
    throw DataError("assemble_frame: no rows remain after listwise deletion");
  }
  if (out.report.rows_dropped_missing > 0 && warnings) {
    warnings->add("assemble_frame: dropped " +
                  std::to_string(out.report.rows_dropped_missing) +
                  " zones with missing values");
  }

  int n = static_cast<int>(kept.size());
  int p = static_cast<int>(predictor_columns.size());
  out.raw_target =
      Eigen::Map<Eigen::VectorXd>(target_vals.data(), n);
  Eigen::MatrixXd x_raw(n, p);
  for (int i = 0; i < n; ++i) x_raw.row(i) = pred_rows[static_cast<std::size_t>(i)];

  double lambda = boxcox_mle(out.raw_target, boxcox_offset, warnings);
  out.boxcox = {lambda, boxcox_offset};

  out.frame.zone_ids = kept;
  out.frame.y = boxcox(out.raw_target, out.boxcox);
  auto z = zscore(x_raw, predictor_columns);
  out.frame.X = z.first;
  out.standardization = z.second;
  out.frame.column_names = predictor_columns;
  out.frame.centroids.reserve(static_cast<std::size_t>(n));
  for (const auto& id : kept) {
    out.frame.centroids.push_back(polygon_centroid(*poly_of.at(id)));
  }
  validate_frame(out.frame);
  return out;
}

GeoTable station_count_table(const std::vector<ZonePolygon>& polygons,
                             const std::vector<GeoPoint>& stations,
                             double radius_miles,
                             const std::string& column_name) {
  std::vector<GeoPoint> centroids;
  centroids.reserve(polygons.size());
  std::vector<std::pair<std::string, std::size_t>> order;
  order.reserve(polygons.size());
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    centroids.push_back(polygon_centroid(polygons[i]));
    order.emplace_back(polygons[i].zone_id, i);
  }
  std::vector<int> counts = count_within_radius(centroids, stations, radius_miles);
  std::sort(order.begin(), order.end());

  GeoTable t;
  t.level = GeoLevel::zcta;
  t.name = "stations";
  t.columns = {column_name};
  t.ids.reserve(order.size());
  t.values.resize(static_cast<int>(order.size()), 1);
  for (std::size_t r = 0; r < order.size(); ++r) {
    t.ids.push_back(order[r].first);
    t.values(static_cast<int>(r), 0) =
        static_cast<double>(counts[order[r].second]);
  }
  validate_geo_table(t);
  return t;
}

SweepTable radius_sweep(const FrameInputs& base,
                        const std::vector<GeoPoint>& stations,
                        const std::vector<double>& radii,
                        const std::vector<ModelKind>& models,
                        const WeightMatrix& w, const GwrSettings& gwr,
                        int threads, WarningLog* warnings) {
  if (radii.empty()) throw ConfigError("radius_sweep: radius list is empty");
  if (models.empty()) throw ConfigError("radius_sweep: model list is empty");
  if (base.station_column.empty()) {
    throw ConfigError("radius_sweep: no station column configured");
  }
  if (std::find(base.predictor_columns.begin(), base.predictor_columns.end(),
                base.station_column) == base.predictor_columns.end()) {
    throw ConfigError("radius_sweep: station column '" + base.station_column +
                      "' is not among the predictors");
  }

  SweepTable table;
  table.radii = radii;
  table.models = models;
  table.aic.assign(radii.size(),
                   std::vector<double>(models.size(), kNaN));

  bool needs_weights = false;
  for (ModelKind m : models) {
    needs_weights = needs_weights || m == ModelKind::spatial_lag ||
                    m == ModelKind::spatial_error;
  }
  LogDetSystem logdet;
  bool logdet_ready = false;

  std::map<double, std::vector<double>> cache;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    auto hit = cache.find(radii[r]);
    if (hit != cache.end()) {
      table.aic[r] = hit->second;
      continue;
    }
    std::vector<GeoTable> tables = base.tables;
    tables.push_back(station_count_table(base.polygons, stations, radii[r],
                                         base.station_column));
    AssembledFrame assembled =
        assemble_frame(tables, base.target_column, base.predictor_columns,
                       base.polygons, base.boxcox_offset, warnings);
    const ModelFrame& frame = assembled.frame;
    if (needs_weights) {
      if (w.zone_ids != frame.zone_ids) {
        throw NumericError(
            "radius_sweep: weight matrix zones do not match the assembled "
            "frame");
      }
      if (!logdet_ready) {
        logdet = log_det_system(w);
        logdet_ready = true;
      }
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
      switch (models[m]) {
        case ModelKind::ols:
          table.aic[r][m] = fit_ols(frame).aic;
          break;
        case ModelKind::spatial_lag:
          table.aic[r][m] =
              fit_spatial_lag(frame, w, warnings, &logdet).aic;
          break;
        case ModelKind::spatial_error:
          table.aic[r][m] =
              fit_spatial_error(frame, w, warnings, &logdet).aic;
          break;
        case ModelKind::gwr:
          table.aic[r][m] = fit_gwr_auto(frame, gwr, threads, warnings).aic;
          break;
      }
    }
    cache.emplace(radii[r], table.aic[r]);
  }

  table.argmin_radius.assign(models.size(), radii[0]);
  for (std::size_t m = 0; m < models.size(); ++m) {
    double best = table.aic[0][m];
    for (std::size_t r = 1; r < radii.size(); ++r) {
      if (table.aic[r][m] < best) {
        best = table.aic[r][m];
        table.argmin_radius[m] = table.radii[r];
      }
    }
  }
  return table;
}

}  // namespace spatfuse
