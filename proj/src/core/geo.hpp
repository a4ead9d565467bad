#pragma once

#include <string>
#include <vector>

namespace spatfuse {

inline constexpr double kEarthRadiusMiles = 3958.8;

// Tolerance for two vertices to be treated as coincident, in degrees.
inline constexpr double kVertexSnapDegrees = 1e-9;

struct GeoPoint {
  double lon = 0.0;  // degrees, [-180, 180]
  double lat = 0.0;  // degrees, [-90, 90]
};

bool geo_point_finite(const GeoPoint& p);

// Throws DataError when coordinates are non-finite or out of range; the
// context string names the offending record.
void validate_geo_point(const GeoPoint& p, const std::string& context);

// Great-circle distance. Rejects non-finite inputs.
double haversine_miles(const GeoPoint& a, const GeoPoint& b);

struct Ring {
  std::vector<GeoPoint> pts;  // closed: first vertex repeated last
  bool hole = false;
};

struct ZonePolygon {
  std::string zone_id;
  // Ring 0 is an exterior ring. Multipart zones carry several non-hole
  // rings, each optionally followed by its holes.
  std::vector<Ring> rings;
};

// Checks ring sizes (>= 4 vertices) and closure; throws DataError naming
// the zone otherwise.
void validate_polygon(const ZonePolygon& p);

// Area-weighted planar centroid in lon/lat space, holes subtracted.
// Throws NumericError for zero-area polygons.
GeoPoint polygon_centroid(const ZonePolygon& p);

// Signed shoelace area of a ring in degree^2 (planar).
double ring_signed_area(const Ring& r);

}  // namespace spatfuse
