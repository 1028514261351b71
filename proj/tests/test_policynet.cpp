#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "skyherd/errors.hpp"
#include "skyherd/oracle.hpp"
#include "skyherd/policy_net.hpp"
#include "skyherd/random.hpp"

using namespace skyherd;

namespace {

NetworkShape tiny_shape() {
  NetworkShape s;
  s.sensory_side = 3;
  s.grid_width = 4;
  s.grid_height = 3;
  s.tactical_hidden = 5;
  s.tactical_out = 4;
  s.conv_maps = 2;
  s.strategic_out = 3;
  s.head_hidden = 4;
  return s;
}

FeatureBatch random_batch(const NetworkShape& shape, std::size_t n, Rng& rng) {
  FeatureBatch batch(shape);
  std::vector<double> sensory(static_cast<std::size_t>(shape.sensory_size()));
  std::vector<double> memory(static_cast<std::size_t>(shape.memory_size()));
  for (std::size_t k = 0; k < n; ++k) {
    for (double& v : sensory) v = uniform01(rng) < 0.4 ? 1.0 : 0.0;
    for (double& v : memory) v = uniform01(rng) < 0.4 ? 1.0 : 0.0;
    batch.add_raw(sensory, memory, kActions[uniform_below(rng, 4)]);
  }
  return batch;
}

// Biases get random values too, so every layer's gradient is exercised.
NetworkParams random_params(const NetworkShape& shape, std::uint64_t seed) {
  NetworkParams params = NetworkParams::initialize(shape, seed);
  Rng rng = make_rng(seed, 99);
  for (auto& p : params.parameters()) {
    if (p.value.rank() == 1) {
      for (double& v : p.value.values()) v = uniform_real(rng, -0.5, 0.5);
    }
  }
  return params;
}

Dataset small_dataset(int episodes, std::uint64_t seed) {
  EpisodeConfig cfg;
  cfg.width = 8;
  cfg.height = 8;
  cfg.num_targets = 6;
  cfg.seed = seed;
  return generate_dataset(cfg, episodes);
}

NetworkShape shape_for(const Dataset& d) {
  NetworkShape s;
  s.sensory_side = d.sense_side();
  s.grid_width = d.width();
  s.grid_height = d.height();
  return s;
}

SensoryMap golden_sensory() {
  SensoryMap s(5);
  for (int i = 0; i < 25; ++i) s.set(i / 5, i % 5, i % 3 == 0);
  return s;
}

MemoryMap golden_memory() {
  MemoryMap m(20, 20);
  for (int p = 0; p < kPlaneCount; ++p) {
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) m.set(static_cast<Plane>(p), {r, c}, (r * 7 + c * 3 + p) % 5 == 0);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("zero parameters give a uniform policy") {
  const auto params = NetworkParams::zeros(NetworkShape{});
  const auto v = forward(params, golden_sensory(), golden_memory());
  for (double p : v.values) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("layer shapes and names") {
  const NetworkShape s;
  CHECK(layer_shape(s, Layer::conv_w) == std::vector<std::size_t>{8, 6, 3, 3});
  CHECK(layer_shape(s, Layer::strategic_w) == std::vector<std::size_t>{64, 3200});
  CHECK(layer_shape(s, Layer::head_w1) == std::vector<std::size_t>{64, 96});
  CHECK(std::string(layer_name(Layer::head_b2)) == "head.fc2.bias");
  const auto params = NetworkParams::initialize(s, 1);
  CHECK(params.parameter_count() == 25 * 64 + 64 + 64 * 32 + 32 + 8 * 54 + 8 + 3200 * 64 + 64 + 96 * 64 + 64 + 64 * 4 + 4);
  const double limit = std::sqrt(6.0 / 3200.0);
  for (double v : params.value(Layer::strategic_w).values()) CHECK(std::abs(v) <= limit);
  for (double v : params.value(Layer::strategic_b).values()) CHECK(v == 0.0);
  CHECK(NetworkParams::initialize(s, 1) == params);
  CHECK_FALSE(NetworkParams::initialize(s, 2) == params);
}

TEST_CASE("pinned forward output") {
  const auto params = NetworkParams::initialize(NetworkShape{}, 20240501);
  const auto v = forward(params, golden_sensory(), golden_memory());
  const std::array<double, 4> golden{0.46707031692147999, 0.17169466838272546, 0.067112671831389428,
                                     0.29412234286440503};
  for (std::size_t i = 0; i < 4; ++i) CHECK(v.values[i] == doctest::Approx(golden[i]).epsilon(1e-12));
}

TEST_CASE("property: scores are a strictly positive distribution") {
  const auto shape = tiny_shape();
  Rng rng = make_rng(5, 5);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto params = random_params(shape, seed);
    const auto batch = random_batch(shape, 8, rng);
    for (const auto& v : forward(params, batch)) {
      double total = 0.0;
      for (double p : v.values) {
        CHECK(p > 0.0);
        total += p;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward rejects mismatched inputs") {
  const auto params = NetworkParams::zeros(NetworkShape{});
  CHECK_THROWS_AS(forward(params, SensoryMap(3), golden_memory()), ContractViolation);
  CHECK_THROWS_AS(forward(params, golden_sensory(), MemoryMap(10, 10)), ContractViolation);
  FeatureBatch wrong(tiny_shape());
  CHECK_THROWS_AS(forward(params, wrong), ContractViolation);
}

TEST_CASE("property: analytic gradients match central differences") {
  const auto shape = tiny_shape();
  Rng rng = make_rng(11, 0);
  constexpr double eps = 1e-5;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NetworkParams params = random_params(shape, seed);
    const auto batch = random_batch(shape, 6, rng);
    std::vector<Tensor> grads;
    loss_and_gradient(params, batch, &grads);
    for (std::size_t l = 0; l < grads.size(); ++l) {
      auto values = params.parameters()[l].value.values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + eps;
        const double up = loss_and_gradient(params, batch, nullptr);
        values[i] = saved - eps;
        const double down = loss_and_gradient(params, batch, nullptr);
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = grads[l][i];
        const double scale = std::max(std::abs(numeric), std::abs(analytic));
        if (scale < 1e-8) continue;
        const double rel = std::abs(numeric - analytic) / scale;
        worst = std::max(worst, rel);
        CAPTURE(params.parameters()[l].name);
        CAPTURE(i);
        CHECK(rel < 1e-4);
      }
    }
  }
  MESSAGE("worst relative gradient error " << worst);
}

TEST_CASE("a zero learning rate leaves parameters untouched") {
  const auto shape = tiny_shape();
  Rng rng = make_rng(3, 3);
  NetworkParams params = random_params(shape, 3);
  const NetworkParams before = params;
  const auto batch = random_batch(shape, 4, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  const double loss = train_step(params, batch, cfg);
  CHECK(loss == doctest::Approx(loss_and_gradient(before, batch, nullptr)));
  for (std::size_t l = 0; l < params.parameters().size(); ++l) {
    CHECK(params.parameters()[l].value == before.parameters()[l].value);
  }
  CHECK_THROWS_AS(train_step(params, FeatureBatch(shape), cfg), ContractViolation);
}

TEST_CASE("training memorises a small batch") {
  const Dataset data = small_dataset(10, 4);
  std::vector<LabeledSample> samples;
  for (std::size_t i = 0; samples.size() < 10; i += 7) {
    const auto s = data[i];
    bool repeat = false;
    for (const auto& t : samples) repeat |= t.sensory == s.sensory && t.memory == s.memory;
    if (!repeat) samples.push_back(s);
  }
  NetworkParams params = NetworkParams::initialize(shape_for(data), 8);
  TrainConfig cfg;
  const auto batch = FeatureBatch::from_samples(params.shape(), samples);
  for (int step = 0; step < 2000; ++step) train_step(params, batch, cfg);
  CHECK(loss_and_gradient(params, batch, nullptr) < 0.01);
  CHECK(params.all_finite());
}

TEST_CASE("divergent training is reported") {
  const auto shape = tiny_shape();
  Rng rng = make_rng(1, 2);
  NetworkParams params = random_params(shape, 1);
  params.value(Layer::head_b2)[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train_step(params, random_batch(shape, 2, rng), TrainConfig{}), NumericError);
}

TEST_CASE("action selection") {
  const ActionScores v{{0.1, 0.2, 0.3, 0.4}};
  CHECK(select_action(v, {Action::N, Action::W, Action::S, Action::E}) == Action::E);
  CHECK(select_action(v, {Action::N, Action::W}) == Action::W);
  const ActionScores tie{{0.25, 0.25, 0.25, 0.25}};
  CHECK(select_action(tie, {Action::N, Action::W, Action::S, Action::E}) == Action::N);
  CHECK(select_action(tie, {Action::S, Action::E}) == Action::S);
  CHECK_THROWS_AS(select_action(v, {}), ContractViolation);
}

TEST_CASE("property: selection ignores monotone transforms of the logits") {
  Rng rng = make_rng(21, 0);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, 4> logits{};
    for (double& l : logits) l = uniform_real(rng, -5.0, 5.0);
    std::array<double, 4> shifted{};
    for (std::size_t i = 0; i < 4; ++i) shifted[i] = 3.0 * std::pow(logits[i], 3) + 7.0;
    ActionSet legal;
    for (Action a : kActions) {
      if (uniform01(rng) < 0.6) legal.insert(a);
    }
    if (legal.empty()) legal.insert(Action::S);
    CHECK(select_action(softmax(logits), legal) == select_action(softmax(shifted), legal));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Dataset data = small_dataset(20, 9);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < data.size(); ++i) (i % 5 == 0 ? val_idx : train_idx).push_back(i);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.seed = 4;
  NetworkParams a = NetworkParams::initialize(shape_for(data), 1);
  NetworkParams b = a;
  std::ostringstream log_a;
  std::ostringstream log_b;
  train(a, data, train_idx, val_idx, cfg, &log_a);
  train(b, data, train_idx, val_idx, cfg, &log_b);
  CHECK(a == b);
  CHECK(log_a.str() == log_b.str());
  const std::string text = log_a.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("cross validation on a single repeated sample") {
  const Dataset source = small_dataset(1, 2);
  Dataset data(source.sense_side(), source.width(), source.height());
  const auto sample = source[3];
  for (int i = 0; i < 40; ++i) data.push_back(sample.sensory, sample.memory, sample.label);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  CrossValidationOptions options;
  options.folds = 2;
  options.validation_stride = 0;
  const auto cv = cross_validate(data, shape_for(data), cfg, options);
  CHECK(cv.folds.size() == 2);
  CHECK(cv.mean_accuracy == doctest::Approx(1.0));

  Dataset tiny(5, 20, 20);
  CHECK_THROWS_AS(cross_validate(tiny, NetworkShape{}, cfg), ConfigError);
}

TEST_CASE("shuffled labels stay at chance, oracle labels beat it") {
  Dataset data = small_dataset(500, 31);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.seed = 5;
  CrossValidationOptions options;
  options.folds = 5;
  options.validation_stride = 0;

  const auto real = cross_validate(data, shape_for(data), cfg, options);
  MESSAGE("oracle-label accuracy " << real.mean_accuracy);
  CHECK(real.mean_accuracy > 0.4);

  // Labels drawn uniformly from the legal moves carry no signal.
  Rng rng = make_rng(6, 6);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data.set_label(i, kActions[uniform_below(rng, 4)]);
  }
  const auto shuffled = cross_validate(data, shape_for(data), cfg, options);
  MESSAGE("shuffled-label accuracy " << shuffled.mean_accuracy);
  CHECK(shuffled.mean_accuracy == doctest::Approx(0.25).epsilon(0.2));
}

TEST_CASE("params files round-trip") {
  const auto params = random_params(tiny_shape(), 12);
  std::stringstream buffer;
  save_params(params, buffer);
  const std::string bytes = buffer.str();
  std::istringstream in(bytes);
  const auto loaded = load_params(in);
  CHECK(loaded == params);

  Rng rng = make_rng(2, 2);
  const auto batch = random_batch(tiny_shape(), 3, rng);
  const auto a = forward(params, batch);
  const auto b = forward(loaded, batch);
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(a[k].values[i] - b[k].values[i]) <= 1e-15);
  }

  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_params(truncated), PersistenceError);
  std::string bumped = bytes;
  bumped[8] = 9;
  std::istringstream version(bumped);
  CHECK_THROWS_AS(load_params(version), PersistenceError);
  std::istringstream junk("not a params file at all");
  CHECK_THROWS_AS(load_params(junk), PersistenceError);
}

TEST_CASE("params for another geometry are rejected by layer") {
  const auto path = std::filesystem::temp_directory_path() / "skyherd_test_params.bin";
  NetworkShape other;
  other.grid_width = 10;
  other.grid_height = 10;
  save_params(NetworkParams::initialize(other, 1), path);
  try {
    load_params(path, NetworkShape{});
    FAIL("expected a persistence error");
  } catch (const PersistenceError& e) {
    CHECK(std::string(e.what()).find("strategic.fc.weight") != std::string::npos);
  }
  CHECK(load_params(path, other).shape() == other);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_params(path), PersistenceError);
}

TEST_CASE("epoch log format") {
  std::ostringstream out;
  write_epoch_log(out, {3, 120, 0.5, 0.75});
  CHECK(out.str() == "3,120,0.5,0.75\n");
}
