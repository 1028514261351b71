#pragma once

#include <istream>
#include <optional>
#include <vector>

#include "skyherd/grid_world.hpp"

namespace skyherd {

namespace wgs84 {
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinor = kSemiMajor * (1.0 - kFlattening);
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

// Degrees and metres above the ellipsoid.
struct GeodeticCoord {
  double latitude = 0.0;
  double longitude = 0.0;
  double altitude = 0.0;
};

struct EcefCoord {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct EnuCoord {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;

  friend EnuCoord operator-(const EnuCoord& a, const EnuCoord& b) {
    return {a.east - b.east, a.north - b.north, a.up - b.up};
  }
};

struct GeoFence {
  std::vector<GeodeticCoord> vertices;  // implicitly closed
};

// Checks ranges and folds longitude into (-180, 180]. Throws DomainError.
GeodeticCoord normalized(const GeodeticCoord& g);

EcefCoord geodetic_to_ecef(const GeodeticCoord& g);

// Fixed-point iteration on latitude until the update drops below 1e-12 rad.
// Points on the polar axis take the closed form with longitude 0.
GeodeticCoord ecef_to_geodetic(const EcefCoord& e);

EnuCoord ecef_to_enu(const EcefCoord& e, const GeodeticCoord& ref);
EcefCoord enu_to_ecef(const EnuCoord& enu, const GeodeticCoord& ref);

EnuCoord geodetic_to_enu(const GeodeticCoord& g, const GeodeticCoord& ref);
GeodeticCoord enu_to_geodetic(const EnuCoord& enu, const GeodeticCoord& ref);

// enu(target) - enu(current), both expressed in the frame at ref.
EnuCoord offset_to_target(const GeodeticCoord& current, const GeodeticCoord& target,
                          const GeodeticCoord& ref);

// Moves cell_size metres in the action's direction; grid north is rotated
// clockwise from true north by grid_bearing degrees. The displacement is taken
// in the tangent plane at frame_ref (defaults to current), so a whole mission
// flown in one frame retraces closed grid loops exactly.
GeodeticCoord action_to_waypoint(const GeodeticCoord& current, Action action,
                                 double cell_size = 2.0, double grid_bearing = 0.0,
                                 const std::optional<GeodeticCoord>& frame_ref = std::nullopt);

inline constexpr double kFenceEdgeTolerance = 1e-9;  // metres

// Ray casting in the ENU plane at ref. Points within kFenceEdgeTolerance of an
// edge count as inside. Throws DomainError for fewer than three distinct
// vertices or zero enclosed area.
bool geofence_contains(const GeoFence& fence, const GeodeticCoord& p, const GeodeticCoord& ref);

// One "lat, lon" pair per line; blank lines and '#' comments ignored.
GeoFence read_fence(std::istream& in);  // throws DatasetError

}  // namespace skyherd
