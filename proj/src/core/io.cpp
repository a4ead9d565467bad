#include "core/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace spatfuse {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing_marker(const std::string& cell) {
  std::string t = trim(cell);
  return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan" ||
         t == "null" || t == "NULL";
}

double parse_number(const std::string& cell, const std::string& context) {
  std::string t = trim(cell);
  if (is_missing_marker(t)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') {
    throw DataError("value '" + t + "' at " + context + " is not numeric");
  }
  return v;
}

double parse_required_number(const std::string& cell,
                             const std::string& context) {
  double v = parse_number(cell, context);
  if (std::isnan(v)) {
    throw DataError("missing value at " + context);
  }
  return v;
}

std::vector<std::vector<std::string>> parse_csv_text(const std::string& text,
                                                     const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    bool blank = row.size() == 1 && trim(row[0]).empty();
    if (!blank) rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_row();
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw DataError("unterminated quoted field in '" + path + "'");
  }
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

int require_column(const std::vector<std::string>& header,
                   const std::string& name, const std::string& path) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (trim(header[j]) == name) return static_cast<int>(j);
  }
  throw DataError("file '" + path + "' is missing required column '" + name +
                  "'");
}

std::string format_full(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows = parse_csv_text(text, path);
  if (rows.empty()) {
    throw DataError("file '" + path + "' is empty");
  }
  CsvTable t;
  t.header = rows[0];
  for (auto& h : t.header) h = trim(h);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != t.header.size()) {
      throw DataError("row " + std::to_string(r + 1) + " of '" + path +
                      "' has " + std::to_string(rows[r].size()) +
                      " fields; header has " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(rows[r]));
  }
  return t;
}

GeoTable read_geo_table(const std::string& path, GeoLevel level,
                        const std::string& name,
                        const std::string& population_column) {
  CsvTable csv = read_csv(path);
  if (csv.header.size() < 2) {
    throw DataError("table '" + path +
                    "' needs an id column plus at least one value column");
  }
  GeoTable t;
  t.level = level;
  t.name = name.empty() ? path : name;
  t.columns.assign(csv.header.begin() + 1, csv.header.end());
  int n = static_cast<int>(csv.rows.size());
  int p = static_cast<int>(t.columns.size());
  t.ids.reserve(static_cast<std::size_t>(n));
  t.values.resize(n, p);
  for (int i = 0; i < n; ++i) {
    const auto& row = csv.rows[static_cast<std::size_t>(i)];
    std::string id = trim(row[0]);
    if (id.empty()) {
      throw DataError("row " + std::to_string(i + 2) + " of '" + path +
                      "' has an empty id");
    }
    t.ids.push_back(id);
    for (int j = 0; j < p; ++j) {
      t.values(i, j) = parse_number(
          row[static_cast<std::size_t>(j + 1)],
          "row " + std::to_string(i + 2) + ", column '" +
              t.columns[static_cast<std::size_t>(j)] + "' of '" + path + "'");
    }
  }
  if (!population_column.empty()) {
    t.population_column = t.column_index(population_column);
    if (t.population_column < 0) {
      throw DataError("table '" + path + "' lacks population column '" +
                      population_column + "'");
    }
  }
  validate_geo_table(t);
  return t;
}

std::vector<NamedPoint> read_points_csv(const std::string& path) {
  CsvTable csv = read_csv(path);
  int ci = require_column(csv.header, "id", path);
  int clon = require_column(csv.header, "longitude", path);
  int clat = require_column(csv.header, "latitude", path);
  std::vector<NamedPoint> out;
  out.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    std::string where = "row " + std::to_string(r + 2) + " of '" + path + "'";
    NamedPoint np;
    np.id = trim(row[static_cast<std::size_t>(ci)]);
    np.point.lon =
        parse_required_number(row[static_cast<std::size_t>(clon)], where);
    np.point.lat =
        parse_required_number(row[static_cast<std::size_t>(clat)], where);
    validate_geo_point(np.point, where);
    out.push_back(std::move(np));
  }
  return out;
}

std::vector<GeoPoint> points_only(const std::vector<NamedPoint>& pts) {
  std::vector<GeoPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.point);
  return out;
}

std::vector<CrosswalkRow> read_crosswalk_csv(const std::string& path) {
  CsvTable csv = read_csv(path);
  int ct = require_column(csv.header, "tract_id", path);
  int cz = require_column(csv.header, "zcta_id", path);
  int cs = require_column(csv.header, "population_share", path);
  std::vector<CrosswalkRow> out;
  out.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    std::string where = "row " + std::to_string(r + 2) + " of '" + path + "'";
    CrosswalkRow cw;
    cw.tract_id = trim(row[static_cast<std::size_t>(ct)]);
    cw.zcta_id = trim(row[static_cast<std::size_t>(cz)]);
    cw.population_share =
        parse_required_number(row[static_cast<std::size_t>(cs)], where);
    out.push_back(std::move(cw));
  }
  return out;
}

namespace {

using nlohmann::json;

std::string id_from_property(const json& props, const std::string& id_property,
                             std::size_t feature_index) {
  if (!props.is_object() || !props.contains(id_property)) {
    throw DataError("feature " + std::to_string(feature_index) +
                    " lacks id property '" + id_property + "'");
  }
  const json& v = props.at(id_property);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) {
    return std::to_string(v.get<unsigned long long>());
  }
  if (v.is_number_float()) return v.dump();
  throw DataError("feature " + std::to_string(feature_index) +
                  ": id property '" + id_property +
                  "' is neither string nor number");
}

Ring parse_ring(const json& coords, bool hole, const std::string& zone_id) {
  if (!coords.is_array() || coords.empty()) {
    throw DataError("zone '" + zone_id + "': ring is not a coordinate array");
  }
  Ring ring;
  ring.hole = hole;
  ring.pts.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() ||
        !pos[1].is_number()) {
      throw DataError("zone '" + zone_id + "': malformed coordinate");
    }
    GeoPoint pt{pos[0].get<double>(), pos[1].get<double>()};
    validate_geo_point(pt, "zone '" + zone_id + "'");
    ring.pts.push_back(pt);
  }
  return ring;
}

void append_polygon_rings(ZonePolygon& zp, const json& poly_coords) {
  for (std::size_t r = 0; r < poly_coords.size(); ++r) {
    zp.rings.push_back(parse_ring(poly_coords[r], r > 0, zp.zone_id));
  }
}

}  // namespace

std::vector<ZonePolygon> read_geojson_polygons(const std::string& path,
                                               const std::string& id_property) {
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError("cannot parse GeoJSON '" + path + "': " + e.what());
  }
  if (!root.is_object() || root.value("type", "") != "FeatureCollection" ||
      !root.contains("features") || !root["features"].is_array()) {
    throw DataError("'" + path + "' is not a GeoJSON FeatureCollection");
  }
  std::vector<ZonePolygon> out;
  const json& features = root["features"];
  for (std::size_t f = 0; f < features.size(); ++f) {
    const json& feat = features[f];
    if (!feat.is_object() || feat.value("type", "") != "Feature") {
      throw DataError("entry " + std::to_string(f) + " in '" + path +
                      "' is not a Feature");
    }
    ZonePolygon zp;
    zp.zone_id = id_from_property(feat.value("properties", json::object()),
                                  id_property, f);
    if (!feat.contains("geometry") || feat["geometry"].is_null()) {
      throw DataError("zone '" + zp.zone_id + "' has null geometry");
    }
    const json& geom = feat["geometry"];
    std::string gtype = geom.value("type", "");
    const json& coords = geom.value("coordinates", json::array());
    if (gtype == "Polygon") {
      append_polygon_rings(zp, coords);
    } else if (gtype == "MultiPolygon") {
      for (const auto& part : coords) append_polygon_rings(zp, part);
    } else {
      throw DataError("zone '" + zp.zone_id + "': unsupported geometry type '" +
                      gtype + "'");
    }
    validate_polygon(zp);
    out.push_back(std::move(zp));
  }
  return out;
}

void write_weights_csv(const std::string& path, const WeightMatrix& w) {
  std::ostringstream os;
  os << "# standardized=" << (w.standardized ? "true" : "false") << "\n";
  os << "# zones=";
  for (std::size_t i = 0; i < w.zone_ids.size(); ++i) {
    if (i) os << ",";
    os << csv_escape(w.zone_ids[i]);
  }
  os << "\n";
  os << "i_id,j_id,weight\n";
  for (int i = 0; i < w.n; ++i) {
    for (const auto& [j, wij] : w.rows[static_cast<std::size_t>(i)]) {
      os << csv_escape(w.zone_ids[static_cast<std::size_t>(i)]) << ","
         << csv_escape(w.zone_ids[static_cast<std::size_t>(j)]) << ","
         << format_full(wij) << "\n";
    }
  }
  write_text_file(path, os.str());
}

WeightMatrix read_weights_csv(const std::string& path) {
  std::string text = read_text_file(path);
  std::istringstream is(text);
  std::string line;
  bool standardized = false;
  std::vector<std::string> zones;
  std::string body;
  int comment_lines = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') {
      ++comment_lines;
      if (line.rfind("# standardized=", 0) == 0) {
        standardized = line.substr(15) == "true";
      } else if (line.rfind("# zones=", 0) == 0) {
        auto fields = parse_csv_text(line.substr(8), path);
        if (!fields.empty()) zones = fields[0];
      }
      continue;
    }
    body += line;
    body += "\n";
  }
  if (comment_lines < 2 || zones.empty()) {
    throw DataError("weights file '" + path +
                    "' lacks the standardized/zones header comments");
  }
  auto rows = parse_csv_text(body, path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"i_id", "j_id",
                                                          "weight"}) {
    throw DataError("weights file '" + path +
                    "' must have header i_id,j_id,weight");
  }
  WeightMatrix w;
  w.n = static_cast<int>(zones.size());
  w.standardized = standardized;
  w.zone_ids = zones;
  w.rows.assign(static_cast<std::size_t>(w.n), {});
  std::map<std::string, int> index;
  for (int i = 0; i < w.n; ++i) {
    if (!index.emplace(zones[static_cast<std::size_t>(i)], i).second) {
      throw DataError("weights file '" + path + "' lists zone '" +
                      zones[static_cast<std::size_t>(i)] + "' twice");
    }
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3) {
      throw DataError("weights file '" + path + "': row " +
                      std::to_string(r + 1) + " malformed");
    }
    auto it_i = index.find(row[0]);
    auto it_j = index.find(row[1]);
    if (it_i == index.end() || it_j == index.end()) {
      throw DataError("weights file '" + path + "': unknown zone in row " +
                      std::to_string(r + 1));
    }
    if (it_i->second == it_j->second) {
      throw DataError("weights file '" + path + "': self weight for zone '" +
                      row[0] + "'");
    }
    double v = parse_required_number(row[2], "row " + std::to_string(r + 1) +
                                                 " of '" + path + "'");
    if (!(v > 0.0)) {
      throw DataError("weights file '" + path + "': nonpositive weight in "
                      "row " + std::to_string(r + 1));
    }
    w.rows[static_cast<std::size_t>(it_i->second)].emplace_back(it_j->second,
                                                                v);
  }
  for (auto& row : w.rows) {
    std::sort(row.begin(), row.end());
  }
  return w;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file '" + path + "'");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write file '" + path + "'");
  }
  out << content;
  if (!out) {
    throw DataError("failed while writing '" + path + "'");
  }
}

}  // namespace spatfuse
