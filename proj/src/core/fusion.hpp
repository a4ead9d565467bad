#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "core/estimators.hpp"
#include "core/frame.hpp"
#include "core/geo.hpp"
#include "core/gwr.hpp"
#include "core/transforms.hpp"
#include "core/util.hpp"
#include "core/weights.hpp"

namespace spatfuse {

struct CrosswalkRow {
  std::string tract_id;
  std::string zcta_id;
  double population_share = 0.0;
};

struct CrosswalkAssignment {
  std::map<std::string, std::string> assigned;  // tract -> zcta
  std::vector<std::string> unmatched;           // sorted tract ids
};

// Assigns each tract to the zcta holding its largest population share,
// provided the share meets the threshold; ties go to the lexicographically
// smallest zcta id.
CrosswalkAssignment crosswalk_assign(const std::vector<CrosswalkRow>& rows,
                                     double threshold);

struct ThresholdCount {
  double threshold = 0.0;
  int matched_zctas = 0;  // distinct zctas receiving at least one tract
};

std::vector<ThresholdCount> threshold_sensitivity(
    const std::vector<CrosswalkRow>& rows,
    const std::vector<double>& thresholds);

enum class GeoLevel { zcta, tract, cbg };
std::string geo_level_name(GeoLevel level);
GeoLevel geo_level_from_name(const std::string& name);

struct GeoTable {
  GeoLevel level = GeoLevel::zcta;
  std::string name;  // source label used in messages
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns; NaN marks missing
  int population_column = -1;

  int rows() const { return static_cast<int>(ids.size()); }
  int cols() const { return static_cast<int>(columns.size()); }
  int column_index(const std::string& column) const;
};

void validate_geo_table(const GeoTable& table);

struct AggregationResult {
  GeoTable table;
  std::vector<std::string> unmatched_tracts;  // assigned but absent from table
};

// Population-weighted means per target zcta. Missing values are excluded
// column by column; a population column is summed instead of averaged.
// Zero total population falls back to an unweighted mean with a warning.
AggregationResult aggregate_to_zcta(
    const GeoTable& table, const std::map<std::string, std::string>& assignment,
    const std::map<std::string, double>& population, WarningLog* warnings);

struct AssemblyReport {
  int rows_in = 0;
  int rows_dropped_missing = 0;
  int rows_out = 0;
  std::vector<std::string> unmatched_tracts;
  std::vector<std::string> island_zones;
  double threshold_used = 0.0;
};

struct AssembledFrame {
  ModelFrame frame;
  AssemblyReport report;
  BoxCoxSpec boxcox;
  StandardizationParams standardization;
  Eigen::VectorXd raw_target;  // pre-transform values for surviving rows
};

// Inner-joins zcta tables, drops rows with missing target or predictors,
// Box-Cox transforms the target with maximum-likelihood lambda, z-scores
// the predictors, and attaches polygon centroids. Zone ids are sorted so
// the result is independent of input row order.
AssembledFrame assemble_frame(const std::vector<GeoTable>& tables,
                              const std::string& target_column,
                              const std::vector<std::string>& predictor_columns,
                              const std::vector<ZonePolygon>& polygons,
                              double boxcox_offset,
                              WarningLog* warnings = nullptr);

// One-column zcta table of station counts within the radius of each
// polygon's centroid.
GeoTable station_count_table(const std::vector<ZonePolygon>& polygons,
                             const std::vector<GeoPoint>& stations,
                             double radius_miles,
                             const std::string& column_name);

struct FrameInputs {
  std::vector<GeoTable> tables;  // zcta level, station counts excluded
  std::string target_column;
  std::vector<std::string> predictor_columns;
  std::vector<ZonePolygon> polygons;
  double boxcox_offset = 1.0;
  std::string station_column;  // rebuilt per radius during sweeps
};

struct SweepTable {
  std::vector<double> radii;
  std::vector<ModelKind> models;
  std::vector<std::vector<double>> aic;  // aic[radius][model]
  std::vector<double> argmin_radius;     // per model, smallest radius on ties
};

// Rebuilds the frame per radius with the station column recomputed and
// re-standardized, refits each model kind, and tabulates AIC.
SweepTable radius_sweep(const FrameInputs& base,
                        const std::vector<GeoPoint>& stations,
                        const std::vector<double>& radii,
                        const std::vector<ModelKind>& models,
                        const WeightMatrix& w, const GwrSettings& gwr,
                        int threads, WarningLog* warnings = nullptr);

}  // namespace spatfuse
