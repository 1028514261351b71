#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "skyherd/errors.hpp"
#include "skyherd/perception.hpp"

namespace skyherd {

std::vector<Tracklet> accumulate_tracklets(const std::vector<DetectionSet>& frames,
                                           const Frame& geometry, const TrackletConfig& config) {
  if (config.window < 1 || config.grid_side < 1) {
    throw ContractViolation("tracklet window and grid side must be positive");
  }
  if (frames.size() != static_cast<std::size_t>(config.window)) {
    throw ContractViolation("expected " + std::to_string(config.window) + " frames, got " +
                            std::to_string(frames.size()));
  }
  const int side = config.grid_side;
  const double cell_w = geometry.width / side;
  const double cell_h = geometry.height / side;
  auto bin_of = [&](const Box& b) {
    return GridCell{std::clamp(static_cast<int>(std::floor(b.centre_y() / cell_h)), 0, side - 1),
                    std::clamp(static_cast<int>(std::floor(b.centre_x() / cell_w)), 0, side - 1)};
  };

  // Per bin, the strongest detection of each frame.
  std::map<GridCell, std::vector<std::optional<Detection>>> bins;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (const auto& d : frames[f]) {
      auto& slots = bins[bin_of(d.box)];
      slots.resize(frames.size());
      auto& slot = slots[f];
      if (!slot || d.confidence > slot->confidence) slot = d;
    }
  }

  std::vector<Tracklet> tracklets;
  for (const auto& [cell, slots] : bins) {
    const auto present = std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); });
    if (present < config.presence_threshold) continue;
    Tracklet t{cell, {}};
    for (std::size_t f = 0; f < slots.size(); ++f) {
      if (slots[f]) t.detections.push_back({static_cast<int>(f), *slots[f]});
    }
    tracklets.push_back(std::move(t));
  }
  return tracklets;
}

}  // namespace skyherd
