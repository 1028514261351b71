#include <algorithm>
#include <cmath>
#include <tuple>

#include "skyherd/perception.hpp"

namespace skyherd {

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

int bin(double coordinate, double extent, int side) {
  const double cell = extent / side;
  return std::clamp(static_cast<int>(std::floor(coordinate / cell)), 0, side - 1);
}

}  // namespace

SensoryMap abstract_to_grid(const DetectionSet& detections, const Frame& frame, int grid_side) {
  SensoryMap map(grid_side);
  for (const auto& d : detections) {
    map.set(bin(d.box.centre_y(), frame.height, grid_side),
            bin(d.box.centre_x(), frame.width, grid_side), true);
  }
  return map;
}

MatchResult match_and_score(const DetectionSet& ground_truth, const DetectionSet& predicted,
                            double threshold) {
  struct Pair {
    double overlap;
    std::size_t truth;
    std::size_t pred;
  };
  std::vector<Pair> pairs;
  for (std::size_t t = 0; t < ground_truth.size(); ++t) {
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      const double o = iou(ground_truth[t].box, predicted[p].box);
      if (o >= threshold) pairs.push_back({o, t, p});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.overlap, a.truth, a.pred) < std::tie(a.overlap, b.truth, b.pred);
  });

  std::vector<bool> truth_used(ground_truth.size(), false);
  std::vector<bool> pred_used(predicted.size(), false);
  MatchResult r;
  for (const auto& pair : pairs) {
    if (truth_used[pair.truth] || pred_used[pair.pred]) continue;
    truth_used[pair.truth] = true;
    pred_used[pair.pred] = true;
    ++r.true_positives;
  }
  r.false_negatives = static_cast<int>(ground_truth.size()) - r.true_positives;
  r.false_positives = static_cast<int>(predicted.size()) - r.true_positives;
  const int denom = r.true_positives + r.false_positives + r.false_negatives;
  r.accuracy = denom == 0 ? 1.0 : static_cast<double>(r.true_positives) / denom;
  return r;
}

MatchResult& operator+=(MatchResult& total, const MatchResult& frame) {
  total.true_positives += frame.true_positives;
  total.false_positives += frame.false_positives;
  total.false_negatives += frame.false_negatives;
  const int denom = total.true_positives + total.false_positives + total.false_negatives;
  total.accuracy = denom == 0 ? 1.0 : static_cast<double>(total.true_positives) / denom;
  return total;
}

}  // namespace skyherd
