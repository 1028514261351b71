#include <algorithm>
#include <cmath>
#include <limits>

#include "skyherd/errors.hpp"
#include "skyherd/perception.hpp"
#include "skyherd/text.hpp"

namespace skyherd {

void ObservationModel::validate() const {
  if (!(accuracy > 0.0 && accuracy <= 1.0)) throw ConfigError("accuracy must lie in (0, 1]");
  if (num_classes < 2) throw ConfigError("need at least two identity classes");
  if (!(peak_min > 0.5 && peak_min <= peak_max && peak_max < 1.0)) {
    throw ConfigError("peak share bounds must satisfy 0.5 < peak_min <= peak_max < 1");
  }
}

std::vector<double> observe_identity(int true_class, const ObservationModel& model, Rng& rng) {
  model.validate();
  if (true_class < 0 || true_class >= model.num_classes) {
    throw ContractViolation("true class " + std::to_string(true_class) + " out of range");
  }
  int winner = true_class;
  if (uniform01(rng) >= model.accuracy) {
    const auto other = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(model.num_classes - 1)));
    winner = other < true_class ? other : other + 1;
  }
  const double peak = uniform_real(rng, model.peak_min, model.peak_max);

  std::vector<double> scores(static_cast<std::size_t>(model.num_classes), 0.0);
  double spread_total = 0.0;
  for (int k = 0; k < model.num_classes; ++k) {
    if (k == winner) continue;
    // Strictly positive so every class keeps some support.
    scores[static_cast<std::size_t>(k)] = 1e-3 + uniform01(rng);
    spread_total += scores[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < model.num_classes; ++k) {
    auto& s = scores[static_cast<std::size_t>(k)];
    s = k == winner ? peak : s / spread_total * (1.0 - peak);
  }
  return scores;
}

int argmax(const std::vector<double>& values) {
  if (values.empty()) throw ContractViolation("argmax of an empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<IdentityBelief> fuse_identity(const std::vector<std::vector<double>>& scores,
                                          std::size_t max_frames) {
  if (scores.empty()) throw ObservationError("no frames to fuse");
  if (scores.size() > max_frames) {
    throw ContractViolation("at most " + std::to_string(max_frames) + " frames can be fused, got " +
                            std::to_string(scores.size()));
  }
  const std::size_t classes = scores.front().size();
  if (classes == 0) throw ObservationError("empty score vector");

  std::vector<double> log_sum(classes, 0.0);
  std::vector<IdentityBelief> trajectory;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const auto& frame = scores[t];
    const auto where = " in frame " + std::to_string(t);
    if (frame.size() != classes) throw ObservationError("score vector length changes" + where);
    double total = 0.0;
    for (double s : frame) {
      if (!std::isfinite(s) || s < 0.0) throw ObservationError("invalid score" + where);
      total += s;
    }
    if (total <= 0.0) throw ObservationError("all-zero score vector" + where);

    for (std::size_t k = 0; k < classes; ++k) {
      log_sum[k] += frame[k] > 0.0 ? std::log(frame[k]) : -std::numeric_limits<double>::infinity();
    }
    const double top = *std::max_element(log_sum.begin(), log_sum.end());
    if (!std::isfinite(top)) throw ObservationError("belief lost all support" + where);
    IdentityBelief belief(classes);
    double norm = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      belief[k] = std::exp(log_sum[k] - top);
      norm += belief[k];
    }
    for (double& b : belief) b /= norm;
    trajectory.push_back(std::move(belief));
  }
  return trajectory;
}

void write_belief_csv(std::ostream& out, const std::vector<IdentityBelief>& trajectory) {
  const std::size_t classes = trajectory.empty() ? 0 : trajectory.front().size();
  out << "frame";
  for (std::size_t k = 0; k < classes; ++k) out << ",id" << k;
  out << '\n';
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    out << t;
    for (double b : trajectory[t]) out << ',' << format_real(b);
    out << '\n';
  }
}

}  // namespace skyherd
