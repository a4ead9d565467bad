#pragma once

#include <unordered_map>
#include <vector>

#include "core/geo.hpp"

namespace spatfuse {

// Uniform lat/lon degree grid over a point set. Candidate cells are chosen
// conservatively and every candidate is verified with an exact haversine
// test, so query results match brute-force counting exactly.
class PointGridIndex {
 public:
  PointGridIndex(std::vector<GeoPoint> points, double cell_degrees);

  // Number of indexed points within radius_miles of center (inclusive).
  int count_within(const GeoPoint& center, double radius_miles) const;

  const std::vector<GeoPoint>& points() const { return points_; }

 private:
  std::vector<GeoPoint> points_;
  double cell_deg_;
  int lon_cells_;
  std::unordered_map<int64_t, std::vector<int>> cells_;

  int64_t key(int lat_cell, int lon_cell) const;
};

// Counts stations within radius_miles of each centroid (boundary
// inclusive). Builds a grid index sized to the radius, giving expected
// sub-quadratic cost.
std::vector<int> count_within_radius(const std::vector<GeoPoint>& centroids,
                                     const std::vector<GeoPoint>& stations,
                                     double radius_miles);

}  // namespace spatfuse
