#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <istream>
#include <vector>

#include "skyherd/grid_world.hpp"
#include "skyherd/random.hpp"

namespace skyherd {

struct Frame {
  double width = 720.0;
  double height = 720.0;
  int index = 0;
  GridPos capture_cell;
};

// Axis-aligned box in pixels; (x, y) is the top-left corner.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double centre_x() const { return x + 0.5 * w; }
  double centre_y() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  Box box;
  double confidence = 1.0;
  std::optional<int> true_identity;  // synthetic ground truth only

  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

// Bins every detection centre into a grid_side x grid_side subdivision of the
// frame. Bins are half-open, so a centre on a boundary goes to the
// higher-index cell; centres on the far frame edge stay in the last cell.
SensoryMap abstract_to_grid(const DetectionSet& detections, const Frame& frame, int grid_side = 5);

struct GridCell {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

struct TrackletEntry {
  int frame = 0;  // position within the accumulated window
  Detection detection;
};

struct Tracklet {
  GridCell cell_bin;
  std::vector<TrackletEntry> detections;
};

struct TrackletConfig {
  int window = 5;              // frames per accumulation window (n)
  int presence_threshold = 3;  // frames a bin must be occupied in
  int grid_side = 5;
};

// Bins detections per frame and emits one tracklet per bin occupied in at
// least presence_threshold frames, ordered by bin (row-major). Within a frame
// the highest-confidence detection of a bin represents it. Throws
// ContractViolation unless frames.size() == window.
std::vector<Tracklet> accumulate_tracklets(const std::vector<DetectionSet>& frames, const Frame& geometry,
                                           const TrackletConfig& config = {});

struct MatchResult {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  // TP / (TP + FP + FN); 1.0 when both sets are empty.
  double accuracy = 1.0;
};

// Greedy one-to-one matching in descending IoU order; a pair counts only at
// IoU >= threshold.
MatchResult match_and_score(const DetectionSet& ground_truth, const DetectionSet& predicted,
                            double threshold = 0.5);
MatchResult& operator+=(MatchResult& total, const MatchResult& frame);

// Synthetic stand-in for the per-frame identity classifier. The argmax of a
// draw is the true class with probability `accuracy`, otherwise a uniformly
// chosen wrong class. The winning class takes a share in
// [peak_min, peak_max]; the rest is split at random over the other classes.
struct ObservationModel {
  double accuracy = 0.936;
  int num_classes = 17;
  double peak_min = 0.55;
  double peak_max = 0.95;

  void validate() const;  // throws ConfigError
};

std::vector<double> observe_identity(int true_class, const ObservationModel& model, Rng& rng);

using IdentityBelief = std::vector<double>;

// Running normalised product of the per-frame scores (uniform prior),
// computed in log space. Element t is the belief after frames 0..t.
// Throws ObservationError on empty input, mismatched lengths, negative or
// non-finite entries, an all-zero frame, or a belief with no support left;
// ContractViolation when more than max_frames are supplied.
std::vector<IdentityBelief> fuse_identity(const std::vector<std::vector<double>>& scores,
                                          std::size_t max_frames = 5);

int argmax(const std::vector<double>& values);

// ---- Synthetic detection streams ----

// Detections a camera centred on the agent would report for the current
// scene: one box per unrecovered target in the sensing window, centred on its
// cell's pixel centre.
DetectionSet render_scene(const EpisodeState& state, const Frame& frame, double box_size = 120.0);

struct SyntheticTarget {
  double centre_x = 0.0;
  double centre_y = 0.0;
  int identity = 0;
};

struct StreamConfig {
  Frame frame;
  int num_frames = 5;
  double box_size = 130.0;
  double drift_px = 2.0;  // per-frame uniform drift of each target centre
  std::uint64_t seed = 0;
};

// Per-frame ground-truth boxes of slowly moving targets.
std::vector<DetectionSet> synthesize_stream(const std::vector<SyntheticTarget>& targets,
                                            const StreamConfig& config);

// Detector replay: every ground-truth box is reported with a small jitter
// except the `misses` listed (frame, box) pairs; `nested` pairs add one extra
// half-size box centred inside that ground-truth box.
struct InjectedErrors {
  std::vector<std::pair<int, int>> misses;
  std::vector<std::pair<int, int>> nested;
};

std::vector<DetectionSet> replay_detector(const std::vector<DetectionSet>& ground_truth,
                                          const InjectedErrors& errors, double jitter_px,
                                          std::uint64_t seed);

// One JSON object per line: {"frame":i,"detections":[{"box":[x,y,w,h],
// "confidence":c,"identity":k},...]}; identity omitted when unknown.
void write_detection_stream(std::ostream& out, const std::vector<DetectionSet>& frames);
std::vector<DetectionSet> read_detection_stream(std::istream& in);  // throws DatasetError

// CSV with header "frame,id0,id1,..." and one row per fused prefix.
void write_belief_csv(std::ostream& out, const std::vector<IdentityBelief>& trajectory);

}  // namespace skyherd
