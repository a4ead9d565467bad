#pragma once

#include <string>
#include <vector>

#include "core/fusion.hpp"
#include "core/geo.hpp"
#include "core/weights.hpp"

namespace spatfuse {

// Generic CSV with a one-line header. Quoted fields follow RFC 4180;
// empty, "NA", "NaN", and "null" cells parse as missing.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

// Numeric table keyed by the first column; remaining columns must parse as
// numbers or missing markers.
GeoTable read_geo_table(const std::string& path, GeoLevel level,
                        const std::string& name,
                        const std::string& population_column);

struct NamedPoint {
  std::string id;
  GeoPoint point;
};

// Expects columns id, longitude, latitude (any order, extras ignored).
std::vector<NamedPoint> read_points_csv(const std::string& path);

std::vector<GeoPoint> points_only(const std::vector<NamedPoint>& pts);

// Expects columns tract_id, zcta_id, population_share.
std::vector<CrosswalkRow> read_crosswalk_csv(const std::string& path);

// GeoJSON FeatureCollection of Polygon / MultiPolygon features; the zone
// id is read from the named property. MultiPolygon parts are flattened
// into one ZonePolygon with several exterior rings.
std::vector<ZonePolygon> read_geojson_polygons(const std::string& path,
                                               const std::string& id_property);

// Edge list (i_id, j_id, weight), rows sorted by ids. The standardized
// flag travels in a leading comment line.
void write_weights_csv(const std::string& path, const WeightMatrix& w);
WeightMatrix read_weights_csv(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace spatfuse
