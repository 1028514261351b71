#include <algorithm>
#include <cmath>
#include <numeric>

#include "skyherd/errors.hpp"
#include "skyherd/policy_net.hpp"
#include "skyherd/random.hpp"
#include "skyherd/text.hpp"

namespace skyherd {

namespace {

constexpr std::size_t kEvalChunk = 256;

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

double train_step(NetworkParams& params, const FeatureBatch& batch, const TrainConfig& cfg) {
  std::vector<Tensor> gradients;
  const double loss = loss_and_gradient(params, batch, &gradients);
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
  auto& layers = params.parameters();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto value = layers[l].value.values();
    auto velocity = layers[l].velocity.values();
    const auto g = gradients[l].values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      velocity[i] = cfg.momentum * velocity[i] + g[i];
      value[i] -= cfg.learning_rate * velocity[i];
    }
  }
  return loss;
}

double train_step(NetworkParams& params, std::span<const LabeledSample> batch,
                  const TrainConfig& cfg) {
  return train_step(params, FeatureBatch::from_samples(params.shape(), batch), cfg);
}

void write_epoch_log(std::ostream& out, const EpochLog& e) {
  out << e.epoch << ',' << e.step << ',' << format_real(e.loss) << ','
      << format_real(e.val_accuracy) << '\n';
}

double decision_accuracy(const NetworkParams& params, const Dataset& data,
                         std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < indices.size(); begin += kEvalChunk) {
    const auto chunk = indices.subspan(begin, std::min(kEvalChunk, indices.size() - begin));
    const auto batch = FeatureBatch::from_dataset(params.shape(), data, chunk);
    const auto scores = forward(params, batch);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const ActionSet legal = legal_actions(data.agent(chunk[k]), data.width(), data.height());
      if (select_action(scores[k], legal) == data.label(chunk[k])) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

TrainReport train(NetworkParams& params, const Dataset& data,
                  std::span<const std::size_t> train_indices,
                  std::span<const std::size_t> validation_indices, const TrainConfig& cfg,
                  std::ostream* log) {
  cfg.validate();
  TrainReport report;
  if (train_indices.empty()) return report;

  std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
  Rng rng = make_rng(cfg.seed, 0x73687566);
  const bool early_stop = !validation_indices.empty();
  NetworkParams best = params;
  report.best_val_accuracy = -1.0;
  int stale = 0;
  long long step = 0;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[uniform_below(rng, i + 1)]);
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const auto slice = std::span(order).subspan(begin, std::min(batch_size, order.size() - begin));
      loss_sum += train_step(params, FeatureBatch::from_dataset(params.shape(), data, slice), cfg);
      ++batches;
      ++step;
    }
    EpochLog entry{epoch, step, loss_sum / static_cast<double>(batches),
                   early_stop ? decision_accuracy(params, data, validation_indices) : 0.0};
    report.epochs.push_back(entry);
    if (log) write_epoch_log(*log, entry);

    if (!early_stop) continue;
    if (entry.val_accuracy > report.best_val_accuracy) {
      report.best_val_accuracy = entry.val_accuracy;
      report.best_epoch = epoch;
      best = params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  if (early_stop && report.best_epoch > 0) {
    params = std::move(best);
  } else {
    report.best_epoch = static_cast<int>(report.epochs.size());
    report.best_val_accuracy = report.epochs.empty() ? 0.0 : report.epochs.back().val_accuracy;
  }
  return report;
}

CrossValidation cross_validate(const Dataset& data, const NetworkShape& shape,
                               const TrainConfig& cfg, const CrossValidationOptions& options) {
  const int k = options.folds;
  if (k < 2) throw ConfigError("cross validation needs at least 2 folds");
  if (data.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("dataset of " + std::to_string(data.size()) + " samples is smaller than " +
                      std::to_string(k) + " folds");
  }
  cfg.validate();

  CrossValidation result;
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    std::vector<std::size_t> test_idx;
    std::size_t seen_train = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (static_cast<int>(i % static_cast<std::size_t>(k)) == fold) {
        test_idx.push_back(i);
      } else if (options.validation_stride > 0 &&
                 seen_train++ % static_cast<std::size_t>(options.validation_stride) == 0) {
        val_idx.push_back(i);
      } else {
        train_idx.push_back(i);
      }
    }

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, 0x666f6c64ULL + static_cast<std::uint64_t>(fold));
    NetworkParams params = NetworkParams::initialize(shape, derive_seed(cfg.seed, static_cast<std::uint64_t>(fold)));
    const auto report = train(params, data, train_idx, val_idx, fold_cfg, options.log);

    FoldResult fr;
    fr.accuracy = decision_accuracy(params, data, test_idx);
    fr.train_size = train_idx.size();
    fr.test_size = test_idx.size();
    fr.epochs = static_cast<int>(report.epochs.size());
    result.folds.push_back(fr);
    if (options.on_fold) options.on_fold(fold, params);
  }
  double total = 0.0;
  for (const auto& f : result.folds) total += f.accuracy;
  result.mean_accuracy = total / static_cast<double>(k);
  return result;
}

}  // namespace skyherd
