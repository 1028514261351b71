#include <algorithm>
#include <set>
#include <string>

#include <json.hpp>

#include "skyherd/errors.hpp"
#include "skyherd/perception.hpp"

namespace skyherd {

namespace {

Box clamp_to_frame(Box b, const Frame& frame) {
  b.w = std::min(b.w, frame.width);
  b.h = std::min(b.h, frame.height);
  b.x = std::clamp(b.x, 0.0, frame.width - b.w);
  b.y = std::clamp(b.y, 0.0, frame.height - b.h);
  return b;
}

Box centred(double cx, double cy, double w, double h) { return {cx - 0.5 * w, cy - 0.5 * h, w, h}; }

}  // namespace

DetectionSet render_scene(const EpisodeState& state, const Frame& frame, double box_size) {
  const int side = state.config.sense_side();
  const int h = state.config.sense_half_width;
  const double cell_w = frame.width / side;
  const double cell_h = frame.height / side;
  DetectionSet out;
  for (std::size_t k = 0; k < state.targets.size(); ++k) {
    const auto& t = state.targets[k];
    if (t.recovered || !in_sensor_range(state, t.pos)) continue;
    const int r = t.pos.row - state.agent.row + h;
    const int c = t.pos.col - state.agent.col + h;
    out.push_back({centred((c + 0.5) * cell_w, (r + 0.5) * cell_h, box_size, box_size), 1.0,
                   static_cast<int>(k)});
  }
  return out;
}

std::vector<DetectionSet> synthesize_stream(const std::vector<SyntheticTarget>& targets,
                                            const StreamConfig& config) {
  Rng rng = make_rng(config.seed, 0x73747265616dULL);
  std::vector<std::pair<double, double>> centres;
  for (const auto& t : targets) centres.emplace_back(t.centre_x, t.centre_y);

  std::vector<DetectionSet> frames;
  for (int f = 0; f < config.num_frames; ++f) {
    DetectionSet truth;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (f > 0) {
        centres[k].first += uniform_real(rng, -config.drift_px, config.drift_px);
        centres[k].second += uniform_real(rng, -config.drift_px, config.drift_px);
      }
      const Box b = clamp_to_frame(
          centred(centres[k].first, centres[k].second, config.box_size, config.box_size), config.frame);
      truth.push_back({b, 1.0, targets[k].identity});
    }
    frames.push_back(std::move(truth));
  }
  return frames;
}

std::vector<DetectionSet> replay_detector(const std::vector<DetectionSet>& ground_truth,
                                          const InjectedErrors& errors, double jitter_px,
                                          std::uint64_t seed) {
  const std::set<std::pair<int, int>> misses(errors.misses.begin(), errors.misses.end());
  const std::set<std::pair<int, int>> nested(errors.nested.begin(), errors.nested.end());
  Rng rng = make_rng(seed, 0x64657465637400ULL);
  const Frame frame;

  std::vector<DetectionSet> out;
  for (std::size_t f = 0; f < ground_truth.size(); ++f) {
    DetectionSet predicted;
    for (std::size_t i = 0; i < ground_truth[f].size(); ++i) {
      const auto key = std::make_pair(static_cast<int>(f), static_cast<int>(i));
      const auto& truth = ground_truth[f][i];
      if (!misses.contains(key)) {
        Box b = truth.box;
        b.x += uniform_real(rng, -jitter_px, jitter_px);
        b.y += uniform_real(rng, -jitter_px, jitter_px);
        predicted.push_back({clamp_to_frame(b, frame), uniform_real(rng, 0.6, 0.99), truth.true_identity});
      }
      if (nested.contains(key)) {
        const Box inner = centred(truth.box.centre_x(), truth.box.centre_y(), 0.5 * truth.box.w,
                                  0.5 * truth.box.h);
        predicted.push_back({inner, 0.5, truth.true_identity});
      }
    }
    out.push_back(std::move(predicted));
  }
  return out;
}

void write_detection_stream(std::ostream& out, const std::vector<DetectionSet>& frames) {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    nlohmann::json record;
    record["frame"] = f;
    record["detections"] = nlohmann::json::array();
    for (const auto& d : frames[f]) {
      nlohmann::json det;
      det["box"] = {d.box.x, d.box.y, d.box.w, d.box.h};
      det["confidence"] = d.confidence;
      if (d.true_identity) det["identity"] = *d.true_identity;
      record["detections"].push_back(std::move(det));
    }
    out << record.dump() << '\n';
  }
}

std::vector<DetectionSet> read_detection_stream(std::istream& in) {
  std::vector<DetectionSet> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      const auto index = record.at("frame").get<std::size_t>();
      if (index != frames.size()) throw DatasetError("frame indices must be contiguous");
      DetectionSet set;
      for (const auto& det : record.at("detections")) {
        const auto& b = det.at("box");
        Detection d{{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                     b.at(3).get<double>()},
                    det.at("confidence").get<double>(),
                    std::nullopt};
        if (det.contains("identity")) d.true_identity = det["identity"].get<int>();
        if (!(d.box.w > 0.0 && d.box.h > 0.0)) throw DatasetError("box must have positive size");
        set.push_back(d);
      }
      frames.push_back(std::move(set));
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("detection stream line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DatasetError& e) {
      throw DatasetError("detection stream line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return frames;
}

}  // namespace skyherd
