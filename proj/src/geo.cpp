#include "pathcast/geo.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {
constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kDegToRad = M_PI / 180.0;
}  // namespace

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double phi1 = lat1 * kDegToRad;
  const double phi2 = lat2 * kDegToRad;
  const double dphi = (lat2 - lat1) * kDegToRad;
  const double dlam = (lon2 - lon1) * kDegToRad;
  const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) * std::sin(dlam / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

Polygon parse_wkt_polygon(std::string_view wkt) {
  std::string text(wkt);
  std::size_t pos = text.find_first_not_of(" \t");
  if (pos == std::string::npos) throw InputError("empty WKT polygon");
  text = text.substr(pos);
  constexpr std::string_view kTag = "POLYGON";
  if (text.compare(0, kTag.size(), kTag) != 0) {
    throw InputError("expected POLYGON geometry, got '" + text.substr(0, 16) + "'");
  }
  std::size_t open = text.find("((");
  std::size_t close = text.rfind("))");
  if (open == std::string::npos || close == std::string::npos || close <= open) {
    throw InputError("malformed WKT polygon: '" + text + "'");
  }
  std::string body = text.substr(open + 2, close - open - 2);
  if (body.find('(') != std::string::npos) {
    throw InputError("WKT polygons with holes are not supported");
  }

  Polygon polygon;
  std::stringstream ss(body);
  std::string vertex;
  while (std::getline(ss, vertex, ',')) {
    std::stringstream vs(vertex);
    GeoPoint p;
    if (!(vs >> p.lon >> p.lat)) {
      throw InputError("malformed WKT vertex: '" + vertex + "'");
    }
    polygon.ring.push_back(p);
  }
  // WKT closes the ring explicitly; drop the duplicate vertex.
  if (polygon.ring.size() >= 2) {
    const auto& a = polygon.ring.front();
    const auto& b = polygon.ring.back();
    if (a.lon == b.lon && a.lat == b.lat) polygon.ring.pop_back();
  }
  if (polygon.ring.size() < 3) throw InputError("WKT polygon needs at least 3 vertices");
  return polygon;
}

std::string to_wkt(const Polygon& polygon) {
  std::string out = "POLYGON((";
  for (const auto& p : polygon.ring) {
    out += format_double(p.lon) + " " + format_double(p.lat) + ", ";
  }
  out += format_double(polygon.ring.front().lon) + " " + format_double(polygon.ring.front().lat);
  out += "))";
  return out;
}

bool point_in_polygon(const Polygon& polygon, double lon, double lat) {
  const auto& ring = polygon.ring;
  const std::size_t n = ring.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[j];
    // Boundary: collinear and within the segment box.
    const double cross = (b.lon - a.lon) * (lat - a.lat) - (b.lat - a.lat) * (lon - a.lon);
    if (cross == 0.0 && std::min(a.lon, b.lon) <= lon && lon <= std::max(a.lon, b.lon) &&
        std::min(a.lat, b.lat) <= lat && lat <= std::max(a.lat, b.lat)) {
      return true;
    }
    if ((a.lat > lat) != (b.lat > lat)) {
      const double x = a.lon + (lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
      if (lon < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace pathcast
