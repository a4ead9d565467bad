#include "core/spatial_index.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace spatfuse {

namespace {

constexpr double kMilesPerDegreeLat = kEarthRadiusMiles * M_PI / 180.0;

int wrap_mod(int v, int m) {
  int r = v % m;
  return r < 0 ? r + m : r;
}

}  // namespace

PointGridIndex::PointGridIndex(std::vector<GeoPoint> points,
                               double cell_degrees)
    : points_(std::move(points)),
      cell_deg_(std::max(cell_degrees, 1e-6)),
      lon_cells_(std::max(1, static_cast<int>(std::ceil(360.0 / cell_deg_)))) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const GeoPoint& p = points_[i];
    int lat_cell = static_cast<int>(std::floor((p.lat + 90.0) / cell_deg_));
    int lon_cell =
        wrap_mod(static_cast<int>(std::floor((p.lon + 180.0) / cell_deg_)),
                 lon_cells_);
    cells_[key(lat_cell, lon_cell)].push_back(static_cast<int>(i));
  }
}

int64_t PointGridIndex::key(int lat_cell, int lon_cell) const {
  return static_cast<int64_t>(lat_cell) * (lon_cells_ + 1) + lon_cell;
}

int PointGridIndex::count_within(const GeoPoint& center,
                                 double radius_miles) const {
  double dlat = radius_miles / kMilesPerDegreeLat;
  int lat_lo = static_cast<int>(std::floor((center.lat - dlat + 90.0) / cell_deg_)) - 1;
  int lat_hi = static_cast<int>(std::floor((center.lat + dlat + 90.0) / cell_deg_)) + 1;

  // The longitude window widens with latitude; use the smallest cosine over
  // the latitude band and fall back to a full sweep near the poles.
  double max_abs_lat = std::min(90.0, std::max(std::fabs(center.lat - dlat),
                                               std::fabs(center.lat + dlat)));
  double c = std::cos(max_abs_lat * M_PI / 180.0);
  int lon_span;
  if (c < 1e-6) {
    lon_span = lon_cells_;
  } else {
    double dlon = dlat / c;
    lon_span = static_cast<int>(std::ceil(dlon / cell_deg_)) + 1;
    lon_span = std::min(lon_span, lon_cells_);
  }
  int lon_center =
      wrap_mod(static_cast<int>(std::floor((center.lon + 180.0) / cell_deg_)),
               lon_cells_);

  int count = 0;
  bool full_sweep = 2 * lon_span + 1 >= lon_cells_;
  for (int la = lat_lo; la <= lat_hi; ++la) {
    int lo = full_sweep ? 0 : lon_center - lon_span;
    int hi = full_sweep ? lon_cells_ - 1 : lon_center + lon_span;
    for (int lc = lo; lc <= hi; ++lc) {
      auto it = cells_.find(key(la, wrap_mod(lc, lon_cells_)));
      if (it == cells_.end()) continue;
      for (int idx : it->second) {
        if (haversine_miles(center, points_[static_cast<std::size_t>(idx)]) <=
            radius_miles) {
          ++count;
        }
      }
    }
  }
  return count;
}

std::vector<int> count_within_radius(const std::vector<GeoPoint>& centroids,
                                     const std::vector<GeoPoint>& stations,
                                     double radius_miles) {
  if (!(radius_miles > 0.0)) {
    throw NumericError("count_within_radius: radius must be positive");
  }
  std::vector<int> counts(centroids.size(), 0);
  if (stations.empty()) return counts;
  PointGridIndex index(stations, radius_miles / kMilesPerDegreeLat);
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    counts[i] = index.count_within(centroids[i], radius_miles);
  }
  return counts;
}

}  // namespace spatfuse
