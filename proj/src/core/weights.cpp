#include "core/weights.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "core/errors.hpp"

namespace spatfuse {

double WeightMatrix::at(int i, int j) const {
  const auto& row = rows[static_cast<std::size_t>(i)];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const std::pair<int, double>& e, int col) {
                               return e.first < col;
                             });
  if (it != row.end() && it->first == j) return it->second;
  return 0.0;
}

double WeightMatrix::row_sum(int i) const {
  double s = 0.0;
  for (const auto& [j, w] : rows[static_cast<std::size_t>(i)]) {
    (void)j;
    s += w;
  }
  return s;
}

std::vector<std::string> WeightMatrix::island_ids() const {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    if (is_island(i)) out.push_back(zone_ids[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::size_t WeightMatrix::edge_count() const {
  std::size_t c = 0;
  for (const auto& row : rows) c += row.size();
  return c;
}

double WeightMatrix::total_weight() const {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += row_sum(i);
  return s;
}

Eigen::MatrixXd WeightMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, w] : rows[static_cast<std::size_t>(i)]) m(i, j) = w;
  }
  return m;
}

namespace {

void check_polygon_inputs(const std::vector<ZonePolygon>& polygons) {
  std::unordered_set<std::string> seen;
  for (const auto& p : polygons) {
    if (!seen.insert(p.zone_id).second) {
      throw DataError("duplicate zone_id '" + p.zone_id + "'");
    }
    validate_polygon(p);
  }
}

WeightMatrix from_adjacency(const std::vector<ZonePolygon>& polygons,
                            const std::vector<std::set<int>>& adj) {
  WeightMatrix w;
  w.n = static_cast<int>(polygons.size());
  w.standardized = false;
  w.zone_ids.reserve(polygons.size());
  for (const auto& p : polygons) w.zone_ids.push_back(p.zone_id);
  w.rows.resize(polygons.size());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    w.rows[i].reserve(adj[i].size());
    for (int j : adj[i]) w.rows[i].emplace_back(j, 1.0);
  }
  return w;
}

struct SnapKey {
  int64_t x, y;
  bool operator==(const SnapKey& o) const { return x == o.x && y == o.y; }
};

struct SnapKeyHash {
  std::size_t operator()(const SnapKey& k) const {
    return static_cast<std::size_t>(
        splitmix64(static_cast<uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL ^
                   static_cast<uint64_t>(k.y)));
  }
};

SnapKey snap(const GeoPoint& p) {
  return SnapKey{static_cast<int64_t>(std::llround(p.lon / kVertexSnapDegrees)),
                 static_cast<int64_t>(std::llround(p.lat / kVertexSnapDegrees))};
}

bool vertices_coincide(const GeoPoint& a, const GeoPoint& b) {
  return std::fabs(a.lon - b.lon) <= kVertexSnapDegrees &&
         std::fabs(a.lat - b.lat) <= kVertexSnapDegrees;
}

}  // namespace

WeightMatrix build_queen_contiguity(const std::vector<ZonePolygon>& polygons) {
  check_polygon_inputs(polygons);
  int n = static_cast<int>(polygons.size());

  // zone -> deduplicated vertex list; snapped bin -> incident zones/vertices
  struct BinEntry {
    int zone;
    GeoPoint pt;
  };
  std::unordered_map<SnapKey, std::vector<BinEntry>, SnapKeyHash> bins;
  std::vector<std::vector<std::pair<SnapKey, GeoPoint>>> zone_vertices(
      static_cast<std::size_t>(n));
  for (int z = 0; z < n; ++z) {
    std::unordered_set<SnapKey, SnapKeyHash> dedup;
    for (const auto& ring : polygons[static_cast<std::size_t>(z)].rings) {
      for (std::size_t i = 0; i + 1 < ring.pts.size(); ++i) {
        SnapKey k = snap(ring.pts[i]);
        if (dedup.insert(k).second) {
          zone_vertices[static_cast<std::size_t>(z)].emplace_back(k,
                                                                  ring.pts[i]);
        }
      }
    }
    for (const auto& [k, pt] : zone_vertices[static_cast<std::size_t>(z)]) {
      bins[k].push_back(BinEntry{z, pt});
    }
  }

  // Coincidence within kVertexSnapDegrees may straddle a bin boundary, so
  // each vertex checks its 3x3 bin neighborhood with an exact tolerance test.
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  for (int z = 0; z < n; ++z) {
    for (const auto& [k, pt] : zone_vertices[static_cast<std::size_t>(z)]) {
      for (int64_t dx = -1; dx <= 1; ++dx) {
        for (int64_t dy = -1; dy <= 1; ++dy) {
          auto it = bins.find(SnapKey{k.x + dx, k.y + dy});
          if (it == bins.end()) continue;
          for (const auto& entry : it->second) {
            if (entry.zone == z) continue;
            if (vertices_coincide(pt, entry.pt)) {
              adj[static_cast<std::size_t>(z)].insert(entry.zone);
              adj[static_cast<std::size_t>(entry.zone)].insert(z);
            }
          }
        }
      }
    }
  }
  return from_adjacency(polygons, adj);
}

WeightMatrix build_queen_contiguity_pairwise(
    const std::vector<ZonePolygon>& polygons) {
  check_polygon_inputs(polygons);
  int n = static_cast<int>(polygons.size());
  std::vector<std::vector<GeoPoint>> verts(static_cast<std::size_t>(n));
  for (int z = 0; z < n; ++z) {
    for (const auto& ring : polygons[static_cast<std::size_t>(z)].rings) {
      for (std::size_t i = 0; i + 1 < ring.pts.size(); ++i) {
        verts[static_cast<std::size_t>(z)].push_back(ring.pts[i]);
      }
    }
  }
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      bool touch = false;
      for (const auto& u : verts[static_cast<std::size_t>(a)]) {
        for (const auto& v : verts[static_cast<std::size_t>(b)]) {
          if (vertices_coincide(u, v)) {
            touch = true;
            break;
          }
        }
        if (touch) break;
      }
      if (touch) {
        adj[static_cast<std::size_t>(a)].insert(b);
        adj[static_cast<std::size_t>(b)].insert(a);
      }
    }
  }
  return from_adjacency(polygons, adj);
}

WeightMatrix row_standardize(const WeightMatrix& w, WarningLog* warnings) {
  if (w.standardized) {
    throw NumericError("row_standardize: matrix is already row-standardized");
  }
  WeightMatrix out = w;
  out.standardized = true;
  for (int i = 0; i < w.n; ++i) {
    double s = w.row_sum(i);
    if (s <= 0.0) {
      if (warnings && w.degree(i) == 0) {
        warnings->add("island zone '" +
                      w.zone_ids[static_cast<std::size_t>(i)] +
                      "' has no neighbors; weight row left at zero");
      }
      continue;
    }
    for (auto& [j, wt] : out.rows[static_cast<std::size_t>(i)]) {
      (void)j;
      wt /= s;
    }
  }
  return out;
}

std::vector<double> spatial_lag_vector(const WeightMatrix& w,
                                       const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != w.n) {
    throw NumericError("spatial_lag_vector: vector length " +
                       std::to_string(x.size()) + " does not match n = " +
                       std::to_string(w.n));
  }
  std::vector<double> out(static_cast<std::size_t>(w.n), 0.0);
  for (int i = 0; i < w.n; ++i) {
    double s = 0.0;
    for (const auto& [j, wt] : w.rows[static_cast<std::size_t>(i)]) {
      s += wt * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

Eigen::VectorXd spatial_lag_vector(const WeightMatrix& w,
                                   const Eigen::VectorXd& x) {
  if (static_cast<int>(x.size()) != w.n) {
    throw NumericError("spatial_lag_vector: vector length " +
                       std::to_string(x.size()) + " does not match n = " +
                       std::to_string(w.n));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.n);
  for (int i = 0; i < w.n; ++i) {
    double s = 0.0;
    for (const auto& [j, wt] : w.rows[static_cast<std::size_t>(i)]) {
      s += wt * x(j);
    }
    out(i) = s;
  }
  return out;
}

WeightMatrix restrict_weights(const WeightMatrix& w,
                              const std::vector<int>& keep,
                              WarningLog* warnings) {
  std::vector<int> remap(static_cast<std::size_t>(w.n), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    remap[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
  }
  WeightMatrix out;
  out.n = static_cast<int>(keep.size());
  out.standardized = false;
  out.rows.resize(keep.size());
  out.zone_ids.reserve(keep.size());
  for (int old_i : keep) {
    out.zone_ids.push_back(w.zone_ids[static_cast<std::size_t>(old_i)]);
  }
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (const auto& [j, wt] : w.rows[static_cast<std::size_t>(keep[k])]) {
      int nj = remap[static_cast<std::size_t>(j)];
      if (nj >= 0) out.rows[k].emplace_back(nj, wt);
    }
    std::sort(out.rows[k].begin(), out.rows[k].end());
  }
  if (w.standardized) return row_standardize(out, warnings);
  return out;
}

std::string kernel_kind_name(KernelKind k) {
  return k == KernelKind::gaussian ? "gaussian" : "bisquare";
}

KernelKind kernel_kind_from_name(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "bisquare") return KernelKind::bisquare;
  throw ConfigError("unknown kernel kind '" + name +
                    "' (expected gaussian or bisquare)");
}

void validate_kernel_spec(const KernelSpec& spec, int n_locations) {
  if (!(spec.bandwidth > 0.0)) {
    throw NumericError("kernel bandwidth must be positive");
  }
  if (spec.adaptive) {
    double rounded = std::round(spec.bandwidth);
    if (std::fabs(spec.bandwidth - rounded) > 1e-9) {
      throw NumericError("adaptive bandwidth must be an integer neighbor count");
    }
    if (static_cast<int>(rounded) >= n_locations) {
      throw NumericError("adaptive neighbor count " +
                         std::to_string(static_cast<int>(rounded)) +
                         " must be < number of locations " +
                         std::to_string(n_locations));
    }
  }
}

std::vector<double> kernel_weights(const GeoPoint& focal,
                                   const std::vector<GeoPoint>& locations,
                                   const KernelSpec& spec) {
  if (locations.empty()) {
    throw NumericError("kernel_weights: empty location list");
  }
  validate_kernel_spec(spec, static_cast<int>(locations.size()));
  std::vector<double> d(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    d[i] = haversine_miles(focal, locations[i]);
  }
  double h = spec.bandwidth;
  if (spec.adaptive) {
    int k = static_cast<int>(std::round(spec.bandwidth));
    std::vector<double> sorted = d;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    h = sorted[static_cast<std::size_t>(k - 1)];
    if (h <= 0.0) {
      // All k nearest coincide with the focal point; degenerate bandwidth.
      throw NumericError("adaptive bandwidth collapsed to zero distance");
    }
  }
  std::vector<double> w(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    double u = d[i] / h;
    if (spec.kind == KernelKind::gaussian) {
      w[i] = std::exp(-0.5 * u * u);
    } else {
      w[i] = d[i] < h ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
  }
  return w;
}

}  // namespace spatfuse
