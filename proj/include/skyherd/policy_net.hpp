#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "skyherd/dataset.hpp"
#include "skyherd/grid_world.hpp"
#include "skyherd/tensor.hpp"

namespace skyherd {

// Layer sizes of the dual-stream network.
//
//   tactical:  S (side^2) -> tactical_hidden -> tactical_out, ReLU
//   strategic: M (planes x H x W) -> 3x3 same-padded conv with conv_maps
//              filters, ReLU -> flatten (map, row, col) -> strategic_out, ReLU
//   head:      concat(tactical, strategic) -> head_hidden, ReLU -> 4 logits
//              -> softmax over (N, W, S, E)
struct NetworkShape {
  int sensory_side = 5;
  int grid_width = 20;
  int grid_height = 20;
  int memory_planes = kPlaneCount;
  int tactical_hidden = 64;
  int tactical_out = 32;
  int conv_maps = 8;
  int strategic_out = 64;
  int head_hidden = 64;

  static constexpr int kConvKernel = 3;

  static NetworkShape for_episode(const EpisodeConfig& config);

  int sensory_size() const { return sensory_side * sensory_side; }
  int grid_cells() const { return grid_width * grid_height; }
  int memory_size() const { return memory_planes * grid_cells(); }
  void validate() const;  // throws ConfigError

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

enum class Layer : int {
  tactical_w1,
  tactical_b1,
  tactical_w2,
  tactical_b2,
  conv_w,
  conv_b,
  strategic_w,
  strategic_b,
  head_w1,
  head_b1,
  head_w2,
  head_b2,
};
inline constexpr int kLayerCount = 12;

const char* layer_name(Layer layer);
std::vector<std::size_t> layer_shape(const NetworkShape& shape, Layer layer);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor velocity;  // momentum buffer

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

class NetworkParams {
 public:
  // Every weight and bias zero: the output is uniform.
  static NetworkParams zeros(const NetworkShape& shape);
  // Weights uniform in +-sqrt(6 / fan_in), biases zero.
  static NetworkParams initialize(const NetworkShape& shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Tensor& value(Layer l) { return params_[static_cast<std::size_t>(l)].value; }
  const Tensor& value(Layer l) const { return params_[static_cast<std::size_t>(l)].value; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;

 private:
  explicit NetworkParams(const NetworkShape& shape);

  NetworkShape shape_;
  std::vector<Parameter> params_;
};

// Softmax-normalised likelihoods in N, W, S, E order.
struct ActionScores {
  std::array<double, 4> values{};

  double operator[](Action a) const { return values[static_cast<std::size_t>(index_of(a))]; }
};

ActionScores softmax(const std::array<double, 4>& logits);

// Dense 0/1 features for a set of samples, one contiguous block per sample.
class FeatureBatch {
 public:
  explicit FeatureBatch(const NetworkShape& shape);

  static FeatureBatch from_samples(const NetworkShape& shape, std::span<const LabeledSample> samples);
  static FeatureBatch from_dataset(const NetworkShape& shape, const Dataset& data,
                                   std::span<const std::size_t> indices);

  // Throws ContractViolation when the maps do not fit the shape.
  void add(const SensoryMap& sensory, const MemoryMap& memory, Action label = Action::N);
  void add_raw(std::span<const double> sensory, std::span<const double> memory, Action label);
  void clear();

  std::size_t size() const { return labels_.size(); }
  const NetworkShape& shape() const { return shape_; }
  const double* sensory() const { return sensory_.data(); }
  const double* memory() const { return memory_.data(); }
  const std::vector<Action>& labels() const { return labels_; }

 private:
  NetworkShape shape_;
  AlignedVector sensory_;
  AlignedVector memory_;
  std::vector<Action> labels_;
};

// Throws ContractViolation when the maps do not fit the parameters.
ActionScores forward(const NetworkParams& params, const SensoryMap& sensory, const MemoryMap& memory);
std::vector<ActionScores> forward(const NetworkParams& params, const FeatureBatch& batch);
std::vector<std::array<double, 4>> forward_logits(const NetworkParams& params, const FeatureBatch& batch);

// Mean cross-entropy over the batch; fills `gradients` (one tensor per
// parameter, in layer order) when non-null.
double loss_and_gradient(const NetworkParams& params, const FeatureBatch& batch,
                         std::vector<Tensor>* gradients);

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  int batch_size = 32;
  int max_epochs = 100;
  // Early stopping: epochs without validation improvement before stopping.
  int patience = 5;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// One momentum-SGD update (v = momentum * v + g; w -= learning_rate * v).
// Returns the batch loss before the update. Throws NumericError on a
// non-finite loss, ContractViolation on an empty batch.
double train_step(NetworkParams& params, const FeatureBatch& batch, const TrainConfig& cfg);
double train_step(NetworkParams& params, std::span<const LabeledSample> batch, const TrainConfig& cfg);

// Argmax over the legal moves, ties to N > W > S > E. Throws
// ContractViolation when nothing is legal.
Action select_action(const ActionScores& scores, ActionSet legal);

struct EpochLog {
  int epoch = 0;
  long long step = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

void write_epoch_log(std::ostream& out, const EpochLog& entry);

// Shuffled mini-batch training with early stopping on validation accuracy.
// With an empty validation set every epoch up to max_epochs runs and the last
// parameters are kept; otherwise the best validation epoch's parameters are
// restored.
TrainReport train(NetworkParams& params, const Dataset& data,
                  std::span<const std::size_t> train_indices,
                  std::span<const std::size_t> validation_indices, const TrainConfig& cfg,
                  std::ostream* log = nullptr);

// Fraction of samples where select_action (masked to the moves legal from the
// sample's agent cell) equals the label.
double decision_accuracy(const NetworkParams& params, const Dataset& data,
                         std::span<const std::size_t> indices);

struct FoldResult {
  double accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  int epochs = 0;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
};

struct CrossValidationOptions {
  int folds = 10;
  // Every n-th training sample of a fold is held back for early stopping;
  // 0 disables early stopping.
  int validation_stride = 20;
  std::ostream* log = nullptr;
  // Called with each fold's trained parameters.
  std::function<void(int, const NetworkParams&)> on_fold;
};

// Sample i belongs to fold i mod k. Throws ConfigError when the dataset has
// fewer samples than folds.
CrossValidation cross_validate(const Dataset& data, const NetworkShape& shape,
                               const TrainConfig& cfg, const CrossValidationOptions& options = {});

inline constexpr std::uint32_t kParamsFormatVersion = 1;

// Versioned little-endian binary container: shape header, then per layer its
// name, dimensions, values and momentum buffer.
void save_params(const NetworkParams& params, const std::filesystem::path& path);
void save_params(const NetworkParams& params, std::ostream& out);
// Throws PersistenceError on truncation, corruption or version mismatch.
NetworkParams load_params(const std::filesystem::path& path);
NetworkParams load_params(std::istream& in);
// Also rejects files whose layers do not match `expected`, naming the first
// offending layer.
NetworkParams load_params(const std::filesystem::path& path, const NetworkShape& expected);

}  // namespace skyherd
