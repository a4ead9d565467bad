#include "core/geo.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace spatfuse {

bool geo_point_finite(const GeoPoint& p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat);
}

void validate_geo_point(const GeoPoint& p, const std::string& context) {
  if (!geo_point_finite(p)) {
    throw DataError("non-finite coordinate in " + context);
  }
  if (p.lon < -180.0 || p.lon > 180.0 || p.lat < -90.0 || p.lat > 90.0) {
    throw DataError("coordinate out of range in " + context + ": (" +
                    std::to_string(p.lon) + ", " + std::to_string(p.lat) + ")");
  }
}

double haversine_miles(const GeoPoint& a, const GeoPoint& b) {
  if (!geo_point_finite(a) || !geo_point_finite(b)) {
    throw DataError("haversine_miles: non-finite coordinate");
  }
  const double deg = M_PI / 180.0;
  double phi1 = a.lat * deg, phi2 = b.lat * deg;
  double dphi = (b.lat - a.lat) * deg;
  double dlam = (b.lon - a.lon) * deg;
  double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlam / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusMiles * std::asin(std::sqrt(h));
}

void validate_polygon(const ZonePolygon& p) {
  if (p.rings.empty()) {
    throw DataError("zone '" + p.zone_id + "': polygon has no rings");
  }
  for (const auto& ring : p.rings) {
    if (ring.pts.size() < 4) {
      throw DataError("zone '" + p.zone_id + "': degenerate ring with " +
                      std::to_string(ring.pts.size()) + " vertices");
    }
    const GeoPoint& first = ring.pts.front();
    const GeoPoint& last = ring.pts.back();
    if (std::fabs(first.lon - last.lon) > kVertexSnapDegrees ||
        std::fabs(first.lat - last.lat) > kVertexSnapDegrees) {
      throw DataError("zone '" + p.zone_id + "': ring is not closed");
    }
    for (const auto& pt : ring.pts) {
      validate_geo_point(pt, "zone '" + p.zone_id + "'");
    }
  }
}

double ring_signed_area(const Ring& r) {
  double a2 = 0.0;
  for (std::size_t i = 0; i + 1 < r.pts.size(); ++i) {
    const GeoPoint& u = r.pts[i];
    const GeoPoint& v = r.pts[i + 1];
    a2 += u.lon * v.lat - v.lon * u.lat;
  }
  return 0.5 * a2;
}

GeoPoint polygon_centroid(const ZonePolygon& p) {
  validate_polygon(p);
  double area_sum = 0.0, cx_sum = 0.0, cy_sum = 0.0;
  for (const auto& ring : p.rings) {
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.pts.size(); ++i) {
      const GeoPoint& u = ring.pts[i];
      const GeoPoint& v = ring.pts[i + 1];
      double cross = u.lon * v.lat - v.lon * u.lat;
      a2 += cross;
      cx += (u.lon + v.lon) * cross;
      cy += (u.lat + v.lat) * cross;
    }
    double area = 0.5 * a2;
    if (std::fabs(area) < 1e-300) continue;
    // Ring centroid times ring area, orientation-independent; holes flip
    // the contribution's sign.
    double sign = ring.hole ? -1.0 : 1.0;
    area_sum += sign * std::fabs(area);
    double inv = 1.0 / (6.0 * area);
    cx_sum += sign * std::fabs(area) * (cx * inv);
    cy_sum += sign * std::fabs(area) * (cy * inv);
  }
  if (std::fabs(area_sum) < 1e-30) {
    throw NumericError("zone '" + p.zone_id + "': zero-area polygon");
  }
  return GeoPoint{cx_sum / area_sum, cy_sum / area_sum};
}

}  // namespace spatfuse
