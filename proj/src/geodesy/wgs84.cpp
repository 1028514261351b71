#include <cmath>
#include <numbers>

#include "skyherd/errors.hpp"
#include "skyherd/geodesy.hpp"

namespace skyherd {

namespace {

using namespace wgs84;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kConvergence = 1e-12;
constexpr int kMaxIterations = 100;

// Exact at multiples of 90 degrees so axis points land on integers.
double sind(double deg) {
  const double r = std::fmod(deg, 360.0);
  if (r == 0.0) return 0.0;
  if (r == 90.0 || r == -270.0) return 1.0;
  if (r == 180.0 || r == -180.0) return 0.0;
  if (r == 270.0 || r == -90.0) return -1.0;
  return std::sin(deg * kDeg);
}

double cosd(double deg) {
  const double r = std::fmod(deg, 360.0);
  if (r == 0.0) return 1.0;
  if (r == 90.0 || r == -90.0 || r == 270.0 || r == -270.0) return 0.0;
  if (r == 180.0 || r == -180.0) return -1.0;
  return std::cos(deg * kDeg);
}

struct Rotation {
  double sl, cl, sp, cp;  // sin/cos of longitude and latitude
};

Rotation rotation_at(const GeodeticCoord& ref) {
  const auto g = normalized(ref);
  return {sind(g.longitude), cosd(g.longitude), sind(g.latitude), cosd(g.latitude)};
}

}  // namespace

GeodeticCoord normalized(const GeodeticCoord& g) {
  if (!std::isfinite(g.latitude) || !std::isfinite(g.longitude) || !std::isfinite(g.altitude)) {
    throw DomainError("geodetic coordinate must be finite");
  }
  if (g.latitude < -90.0 || g.latitude > 90.0) {
    throw DomainError("latitude " + std::to_string(g.latitude) + " outside [-90, 90]");
  }
  GeodeticCoord out = g;
  out.longitude = std::fmod(g.longitude, 360.0);
  if (out.longitude > 180.0) out.longitude -= 360.0;
  if (out.longitude <= -180.0) out.longitude += 360.0;
  return out;
}

EcefCoord geodetic_to_ecef(const GeodeticCoord& input) {
  const auto g = normalized(input);
  const double sp = sind(g.latitude);
  const double cp = cosd(g.latitude);
  const double n = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * sp * sp);
  return {(n + g.altitude) * cp * cosd(g.longitude), (n + g.altitude) * cp * sind(g.longitude),
          (n * (1.0 - kEccentricitySq) + g.altitude) * sp};
}

GeodeticCoord ecef_to_geodetic(const EcefCoord& e) {
  if (!std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(e.z)) {
    throw DomainError("ECEF coordinate must be finite");
  }
  const double p = std::hypot(e.x, e.y);
  if (p == 0.0 && e.z == 0.0) throw DomainError("ECEF origin has no geodetic position");

  // Closer than this to the axis the longitude is meaningless and the
  // iteration below loses precision.
  if (p < 1e-9) {
    return {e.z > 0.0 ? 90.0 : -90.0, 0.0, std::abs(e.z) - kSemiMinor};
  }

  double lat = std::atan2(e.z, p * (1.0 - kEccentricitySq));
  for (int i = 0; i < kMaxIterations; ++i) {
    const double s = std::sin(lat);
    const double n = kSemiMajor / std::sqrt(1.0 - kEccentricitySq * s * s);
    const double next = std::atan2(e.z + kEccentricitySq * n * s, p);
    const double delta = std::abs(next - lat);
    lat = next;
    if (delta < kConvergence) break;
  }
  const double s = std::sin(lat);
  const double c = std::cos(lat);
  // Stable everywhere, unlike p / cos(lat) - N near the poles.
  const double h = p * c + e.z * s - kSemiMajor * std::sqrt(1.0 - kEccentricitySq * s * s);

  double lon = std::atan2(e.y, e.x) / kDeg;
  if (lon <= -180.0) lon += 360.0;
  return {lat / kDeg, lon, h};
}

EnuCoord ecef_to_enu(const EcefCoord& e, const GeodeticCoord& ref) {
  const auto r = rotation_at(ref);
  const auto o = geodetic_to_ecef(ref);
  const double dx = e.x - o.x;
  const double dy = e.y - o.y;
  const double dz = e.z - o.z;
  return {-r.sl * dx + r.cl * dy,
          -r.sp * r.cl * dx - r.sp * r.sl * dy + r.cp * dz,
          r.cp * r.cl * dx + r.cp * r.sl * dy + r.sp * dz};
}

EcefCoord enu_to_ecef(const EnuCoord& v, const GeodeticCoord& ref) {
  const auto r = rotation_at(ref);
  const auto o = geodetic_to_ecef(ref);
  // Rotate first and add the origin once, so the large coordinates are
  // rounded a single time.
  const double dx = -r.sl * v.east - r.sp * r.cl * v.north + r.cp * r.cl * v.up;
  const double dy = r.cl * v.east - r.sp * r.sl * v.north + r.cp * r.sl * v.up;
  const double dz = r.cp * v.north + r.sp * v.up;
  return {o.x + dx, o.y + dy, o.z + dz};
}

EnuCoord geodetic_to_enu(const GeodeticCoord& g, const GeodeticCoord& ref) {
  return ecef_to_enu(geodetic_to_ecef(g), ref);
}

GeodeticCoord enu_to_geodetic(const EnuCoord& enu, const GeodeticCoord& ref) {
  return ecef_to_geodetic(enu_to_ecef(enu, ref));
}

EnuCoord offset_to_target(const GeodeticCoord& current, const GeodeticCoord& target,
                          const GeodeticCoord& ref) {
  return geodetic_to_enu(target, ref) - geodetic_to_enu(current, ref);
}

GeodeticCoord action_to_waypoint(const GeodeticCoord& current, Action action, double cell_size,
                                 double grid_bearing,
                                 const std::optional<GeodeticCoord>& frame_ref) {
  if (!std::isfinite(cell_size) || !std::isfinite(grid_bearing)) {
    throw DomainError("cell size and bearing must be finite");
  }
  // Grid rows grow southward, columns eastward.
  const GridPos step = displaced({0, 0}, action);
  const double grid_north = -step.row * cell_size;
  const double grid_east = step.col * cell_size;
  const double sb = sind(grid_bearing);
  const double cb = cosd(grid_bearing);
  const EnuCoord delta{grid_east * cb + grid_north * sb, grid_north * cb - grid_east * sb, 0.0};

  const GeodeticCoord ref = frame_ref.value_or(current);
  const EnuCoord here = geodetic_to_enu(current, ref);
  // Waypoints hold the current altitude; the tangent plane would otherwise
  // climb by d^2 / 2R per step.
  GeodeticCoord target = enu_to_geodetic({here.east + delta.east, here.north + delta.north, here.up}, ref);
  target.altitude = current.altitude;
  return target;
}

}  // namespace skyherd
