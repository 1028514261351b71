#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "skyherd/errors.hpp"
#include "skyherd/policy_net.hpp"
#include "skyherd/random.hpp"

namespace skyherd {

namespace {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;
using ConstVector = Eigen::Map<const Eigen::VectorXd>;
using Vector = Eigen::Map<Eigen::VectorXd>;
using ConstBlock = Eigen::Map<const Matrix>;

constexpr int kTaps = NetworkShape::kConvKernel * NetworkShape::kConvKernel;

ConstWeights weights(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.dim(0)),
          static_cast<Eigen::Index>(t.size() / t.dim(0))};
}

Weights weights(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.dim(0)),
          static_cast<Eigen::Index>(t.size() / t.dim(0))};
}

ConstVector bias(const Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.size())}; }
Vector bias(Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.size())}; }

void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0); }

// Transposed im2col of one sample: row = grid cell, column = (plane, ky, kx).
void build_patches(const double* memory, const NetworkShape& s, Matrix& patches) {
  const int w = s.grid_width;
  const int h = s.grid_height;
  patches.setZero(s.grid_cells(), s.memory_planes * kTaps);
  for (int p = 0; p < s.memory_planes; ++p) {
    const double* plane = memory + static_cast<std::ptrdiff_t>(p) * s.grid_cells();
    for (int ky = 0; ky < NetworkShape::kConvKernel; ++ky) {
      for (int kx = 0; kx < NetworkShape::kConvKernel; ++kx) {
        double* column = patches.col(p * kTaps + ky * NetworkShape::kConvKernel + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int r = std::max(0, -dy); r < std::min(h, h - dy); ++r) {
          const double* src = plane + (r + dy) * w;
          double* dst = column + r * w;
          for (int c = std::max(0, -dx); c < std::min(w, w - dx); ++c) dst[c] = src[c + dx];
        }
      }
    }
  }
}

// Activations of one forward pass, columns are samples.
struct Activations {
  Matrix tactical1;
  Matrix tactical2;
  std::vector<Matrix> patches;
  Matrix conv;       // (maps * cells) x batch, map-major within a column
  Matrix strategic;
  Matrix joined;     // concat(tactical2, strategic)
  Matrix head1;
  Matrix logits;
};

void check_batch(const NetworkParams& params, const FeatureBatch& batch) {
  if (!(params.shape() == batch.shape())) {
    throw ContractViolation("feature batch shape does not match network parameters");
  }
}

void run_forward(const NetworkParams& params, const FeatureBatch& batch, Activations& act,
                 bool keep_patches) {
  const NetworkShape& s = params.shape();
  const auto n = static_cast<Eigen::Index>(batch.size());
  const ConstBlock xs(batch.sensory(), s.sensory_size(), n);

  act.tactical1 = weights(params.value(Layer::tactical_w1)) * xs;
  act.tactical1.colwise() += bias(params.value(Layer::tactical_b1));
  relu_inplace(act.tactical1);
  act.tactical2 = weights(params.value(Layer::tactical_w2)) * act.tactical1;
  act.tactical2.colwise() += bias(params.value(Layer::tactical_b2));
  relu_inplace(act.tactical2);

  const auto cells = static_cast<Eigen::Index>(s.grid_cells());
  const auto maps = static_cast<Eigen::Index>(s.conv_maps);
  act.conv.resize(cells * maps, n);
  act.patches.resize(keep_patches ? static_cast<std::size_t>(n) : 1);
  const auto conv_w = weights(params.value(Layer::conv_w));
  const auto conv_b = bias(params.value(Layer::conv_b));
  for (Eigen::Index b = 0; b < n; ++b) {
    Matrix& patches = act.patches[keep_patches ? static_cast<std::size_t>(b) : 0];
    build_patches(batch.memory() + b * s.memory_size(), s, patches);
    Eigen::Map<Matrix> out(act.conv.col(b).data(), cells, maps);
    out.noalias() = patches * conv_w.transpose();
    out.rowwise() += conv_b.transpose();
    out = out.cwiseMax(0.0);
  }

  act.strategic = weights(params.value(Layer::strategic_w)) * act.conv;
  act.strategic.colwise() += bias(params.value(Layer::strategic_b));
  relu_inplace(act.strategic);

  act.joined.resize(s.tactical_out + s.strategic_out, n);
  act.joined.topRows(s.tactical_out) = act.tactical2;
  act.joined.bottomRows(s.strategic_out) = act.strategic;

  act.head1 = weights(params.value(Layer::head_w1)) * act.joined;
  act.head1.colwise() += bias(params.value(Layer::head_b1));
  relu_inplace(act.head1);
  act.logits = weights(params.value(Layer::head_w2)) * act.head1;
  act.logits.colwise() += bias(params.value(Layer::head_b2));
}

std::array<double, 4> column(const Matrix& m, Eigen::Index c) {
  return {m(0, c), m(1, c), m(2, c), m(3, c)};
}

}  // namespace

NetworkShape NetworkShape::for_episode(const EpisodeConfig& config) {
  NetworkShape shape;
  shape.sensory_side = config.sense_side();
  shape.grid_width = config.width;
  shape.grid_height = config.height;
  return shape;
}

void NetworkShape::validate() const {
  for (int v : {sensory_side, grid_width, grid_height, memory_planes, tactical_hidden, tactical_out,
                conv_maps, strategic_out, head_hidden}) {
    if (v < 1) throw ConfigError("network dimensions must be positive");
  }
}

const char* layer_name(Layer layer) {
  static constexpr const char* kNames[kLayerCount] = {
      "tactical.fc1.weight", "tactical.fc1.bias", "tactical.fc2.weight", "tactical.fc2.bias",
      "strategic.conv.weight", "strategic.conv.bias", "strategic.fc.weight", "strategic.fc.bias",
      "head.fc1.weight", "head.fc1.bias", "head.fc2.weight", "head.fc2.bias",
  };
  return kNames[static_cast<int>(layer)];
}

std::vector<std::size_t> layer_shape(const NetworkShape& s, Layer layer) {
  auto u = [](int v) { return static_cast<std::size_t>(v); };
  const std::size_t k = NetworkShape::kConvKernel;
  switch (layer) {
    case Layer::tactical_w1: return {u(s.tactical_hidden), u(s.sensory_size())};
    case Layer::tactical_b1: return {u(s.tactical_hidden)};
    case Layer::tactical_w2: return {u(s.tactical_out), u(s.tactical_hidden)};
    case Layer::tactical_b2: return {u(s.tactical_out)};
    case Layer::conv_w: return {u(s.conv_maps), u(s.memory_planes), k, k};
    case Layer::conv_b: return {u(s.conv_maps)};
    case Layer::strategic_w: return {u(s.strategic_out), u(s.conv_maps * s.grid_cells())};
    case Layer::strategic_b: return {u(s.strategic_out)};
    case Layer::head_w1: return {u(s.head_hidden), u(s.tactical_out + s.strategic_out)};
    case Layer::head_b1: return {u(s.head_hidden)};
    case Layer::head_w2: return {4, u(s.head_hidden)};
    case Layer::head_b2: return {4};
  }
  return {};
}

NetworkParams::NetworkParams(const NetworkShape& shape) : shape_(shape) {
  shape_.validate();
  params_.reserve(kLayerCount);
  for (int l = 0; l < kLayerCount; ++l) {
    const auto dims = layer_shape(shape_, static_cast<Layer>(l));
    params_.push_back({layer_name(static_cast<Layer>(l)), Tensor(dims), Tensor(dims)});
  }
}

NetworkParams NetworkParams::zeros(const NetworkShape& shape) { return NetworkParams(shape); }

NetworkParams NetworkParams::initialize(const NetworkShape& shape, std::uint64_t seed) {
  NetworkParams params(shape);
  Rng rng = make_rng(seed, 0x696e6974);
  for (auto& p : params.params_) {
    if (p.value.rank() < 2) continue;
    const double fan_in = static_cast<double>(p.value.size() / p.value.dim(0));
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : p.value.values()) v = uniform_real(rng, -limit, limit);
  }
  return params;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

bool NetworkParams::all_finite() const {
  for (const auto& p : params_) {
    for (double v : p.value.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ActionScores softmax(const std::array<double, 4>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  ActionScores out;
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    out.values[i] = std::exp(logits[i] - top);
    total += out.values[i];
  }
  for (double& v : out.values) v /= total;
  return out;
}

FeatureBatch::FeatureBatch(const NetworkShape& shape) : shape_(shape) {}

void FeatureBatch::add(const SensoryMap& sensory, const MemoryMap& memory, Action label) {
  if (sensory.side() != shape_.sensory_side || memory.width() != shape_.grid_width ||
      memory.height() != shape_.grid_height) {
    throw ContractViolation("input maps do not match the network shape");
  }
  for (auto v : sensory.cells()) sensory_.push_back(v);
  for (auto v : memory.raw()) memory_.push_back(v);
  labels_.push_back(label);
}

void FeatureBatch::add_raw(std::span<const double> sensory, std::span<const double> memory,
                           Action label) {
  if (sensory.size() != static_cast<std::size_t>(shape_.sensory_size()) ||
      memory.size() != static_cast<std::size_t>(shape_.memory_size())) {
    throw ContractViolation("raw features do not match the network shape");
  }
  sensory_.insert(sensory_.end(), sensory.begin(), sensory.end());
  memory_.insert(memory_.end(), memory.begin(), memory.end());
  labels_.push_back(label);
}

void FeatureBatch::clear() {
  sensory_.clear();
  memory_.clear();
  labels_.clear();
}

FeatureBatch FeatureBatch::from_samples(const NetworkShape& shape,
                                        std::span<const LabeledSample> samples) {
  FeatureBatch batch(shape);
  for (const auto& s : samples) batch.add(s.sensory, s.memory, s.label);
  return batch;
}

FeatureBatch FeatureBatch::from_dataset(const NetworkShape& shape, const Dataset& data,
                                        std::span<const std::size_t> indices) {
  if (data.sense_side() != shape.sensory_side || data.width() != shape.grid_width ||
      data.height() != shape.grid_height) {
    throw ContractViolation("dataset geometry does not match the network shape");
  }
  FeatureBatch batch(shape);
  const auto ns = static_cast<std::size_t>(shape.sensory_size());
  const auto nm = static_cast<std::size_t>(shape.memory_size());
  batch.sensory_.resize(indices.size() * ns);
  batch.memory_.resize(indices.size() * nm);
  batch.labels_.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    data.features(indices[k], std::span(batch.sensory_).subspan(k * ns, ns),
                  std::span(batch.memory_).subspan(k * nm, nm));
    batch.labels_.push_back(data.label(indices[k]));
  }
  return batch;
}

std::vector<std::array<double, 4>> forward_logits(const NetworkParams& params,
                                                  const FeatureBatch& batch) {
  check_batch(params, batch);
  Activations act;
  run_forward(params, batch, act, false);
  std::vector<std::array<double, 4>> out;
  out.reserve(batch.size());
  for (Eigen::Index c = 0; c < act.logits.cols(); ++c) out.push_back(column(act.logits, c));
  return out;
}

std::vector<ActionScores> forward(const NetworkParams& params, const FeatureBatch& batch) {
  std::vector<ActionScores> out;
  for (const auto& logits : forward_logits(params, batch)) out.push_back(softmax(logits));
  return out;
}

ActionScores forward(const NetworkParams& params, const SensoryMap& sensory,
                     const MemoryMap& memory) {
  FeatureBatch batch(params.shape());
  batch.add(sensory, memory);
  return forward(params, batch).front();
}

double loss_and_gradient(const NetworkParams& params, const FeatureBatch& batch,
                         std::vector<Tensor>* gradients) {
  check_batch(params, batch);
  if (batch.size() == 0) throw ContractViolation("empty batch");
  const NetworkShape& s = params.shape();
  const auto n = static_cast<Eigen::Index>(batch.size());

  Activations act;
  run_forward(params, batch, act, gradients != nullptr);

  // Softmax and cross-entropy; delta = (p - y) / n.
  Matrix delta(4, n);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto logits = column(act.logits, b);
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double l : logits) total += std::exp(l - top);
    const double log_total = top + std::log(total);
    const int y = index_of(batch.labels()[static_cast<std::size_t>(b)]);
    loss -= logits[static_cast<std::size_t>(y)] - log_total;
    for (int i = 0; i < 4; ++i) {
      delta(i, b) = (std::exp(logits[static_cast<std::size_t>(i)] - log_total) - (i == y ? 1.0 : 0.0)) /
                    static_cast<double>(n);
    }
  }
  loss /= static_cast<double>(n);
  if (gradients == nullptr) return loss;

  gradients->clear();
  for (const auto& p : params.parameters()) gradients->emplace_back(p.value.shape());
  auto grad = [&](Layer l) -> Tensor& { return (*gradients)[static_cast<std::size_t>(l)]; };
  auto relu_mask = [](Matrix& d, const Matrix& activation) {
    d = d.cwiseProduct((activation.array() > 0.0).cast<double>().matrix());
  };

  // Head.
  weights(grad(Layer::head_w2)).noalias() = delta * act.head1.transpose();
  bias(grad(Layer::head_b2)) = delta.rowwise().sum();
  Matrix d_head1 = weights(params.value(Layer::head_w2)).transpose() * delta;
  relu_mask(d_head1, act.head1);
  weights(grad(Layer::head_w1)).noalias() = d_head1 * act.joined.transpose();
  bias(grad(Layer::head_b1)) = d_head1.rowwise().sum();
  const Matrix d_joined = weights(params.value(Layer::head_w1)).transpose() * d_head1;

  // Tactical stream.
  Matrix d_tactical2 = d_joined.topRows(s.tactical_out);
  relu_mask(d_tactical2, act.tactical2);
  weights(grad(Layer::tactical_w2)).noalias() = d_tactical2 * act.tactical1.transpose();
  bias(grad(Layer::tactical_b2)) = d_tactical2.rowwise().sum();
  Matrix d_tactical1 = weights(params.value(Layer::tactical_w2)).transpose() * d_tactical2;
  relu_mask(d_tactical1, act.tactical1);
  const ConstBlock xs(batch.sensory(), s.sensory_size(), n);
  weights(grad(Layer::tactical_w1)).noalias() = d_tactical1 * xs.transpose();
  bias(grad(Layer::tactical_b1)) = d_tactical1.rowwise().sum();

  // Strategic stream.
  Matrix d_strategic = d_joined.bottomRows(s.strategic_out);
  relu_mask(d_strategic, act.strategic);
  weights(grad(Layer::strategic_w)).noalias() = d_strategic * act.conv.transpose();
  bias(grad(Layer::strategic_b)) = d_strategic.rowwise().sum();
  Matrix d_conv = weights(params.value(Layer::strategic_w)).transpose() * d_strategic;
  relu_mask(d_conv, act.conv);

  const auto cells = static_cast<Eigen::Index>(s.grid_cells());
  const auto maps = static_cast<Eigen::Index>(s.conv_maps);
  Matrix d_conv_w = Matrix::Zero(s.memory_planes * kTaps, maps);
  Eigen::VectorXd d_conv_b = Eigen::VectorXd::Zero(maps);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Eigen::Map<const Matrix> d_out(d_conv.col(b).data(), cells, maps);
    d_conv_w.noalias() += act.patches[static_cast<std::size_t>(b)].transpose() * d_out;
    d_conv_b += d_out.colwise().sum().transpose();
  }
  weights(grad(Layer::conv_w)) = d_conv_w.transpose();
  bias(grad(Layer::conv_b)) = d_conv_b;
  return loss;
}

Action select_action(const ActionScores& scores, ActionSet legal) {
  if (legal.empty()) throw ContractViolation("select_action with no legal moves");
  Action best = legal.first();
  for (Action a : kActions) {
    if (legal.contains(a) && scores[a] > scores[best]) best = a;
  }
  return best;
}

}  // namespace skyherd
