#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pathcast {

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

/// Single-ring polygon in (lon, lat) degrees, WKT vertex order.
struct Polygon {
  std::vector<GeoPoint> ring;
  bool empty() const { return ring.empty(); }
};

/// Great-circle distance between two (lat, lon) points in kilometers.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Parses "POLYGON((lon lat, lon lat, ...))" with one outer ring.
/// Holes and multipolygons are rejected.
Polygon parse_wkt_polygon(std::string_view wkt);
std::string to_wkt(const Polygon& polygon);

/// Ray-casting containment test; boundary points count as inside.
bool point_in_polygon(const Polygon& polygon, double lon, double lat);

}  // namespace pathcast
