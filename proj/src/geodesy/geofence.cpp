#include <algorithm>
#include <cmath>
#include <string>

#include "skyherd/errors.hpp"
#include "skyherd/geodesy.hpp"
#include "skyherd/text.hpp"

namespace skyherd {

namespace {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

}  // namespace

bool geofence_contains(const GeoFence& fence, const GeodeticCoord& p, const GeodeticCoord& ref) {
  std::vector<Point> ring;
  std::vector<Point> distinct;
  for (const auto& v : fence.vertices) {
    const auto e = geodetic_to_enu(v, ref);
    const Point q{e.east, e.north};
    ring.push_back(q);
    const bool repeat = std::any_of(distinct.begin(), distinct.end(), [&](const Point& o) {
      return std::hypot(o.x - q.x, o.y - q.y) <= kFenceEdgeTolerance;
    });
    if (!repeat) distinct.push_back(q);
  }
  if (distinct.size() < 3) throw DomainError("fence needs at least 3 distinct vertices");

  double area = 0.0;
  double extent = 0.0;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    area += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
    extent = std::max(extent, std::hypot(ring[i].x - ring[0].x, ring[i].y - ring[0].y));
  }
  // Relative to the fence size so rounding in the projection cannot fake an area.
  if (std::abs(area) <= 1e-9 * extent * extent) throw DomainError("fence encloses no area");

  const auto pe = geodetic_to_enu(p, ref);
  const Point q{pe.east, pe.north};
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point a = ring[j];
    const Point b = ring[i];
    if (segment_distance(q, a, b) <= kFenceEdgeTolerance) return true;
    if ((b.y > q.y) != (a.y > q.y)) {
      const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < x) inside = !inside;
    }
  }
  return inside;
}

GeoFence read_fence(std::istream& in) {
  GeoFence fence;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto parts = split(body, ',');
    if (parts.size() != 2) {
      throw DatasetError("fence line " + std::to_string(line_no) + ": expected 'lat, lon'");
    }
    try {
      fence.vertices.push_back(normalized({parse_double(trim(parts[0]), "latitude"), parse_double(trim(parts[1]), "longitude"), 0.0}));
    } catch (const Error& e) {
      throw DatasetError("fence line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (fence.vertices.size() < 3) throw DatasetError("fence needs at least 3 vertices");
  return fence;
}

}  // namespace skyherd
