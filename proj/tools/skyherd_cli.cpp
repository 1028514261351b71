#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "skyherd/errors.hpp"
#include "skyherd/geodesy.hpp"
#include "skyherd/harness.hpp"
#include "skyherd/oracle.hpp"
#include "skyherd/perception.hpp"
#include "skyherd/policy_net.hpp"
#include "skyherd/text.hpp"

using namespace skyherd;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Keys a --config file may carry besides the episode keys.
struct Settings {
  EpisodeConfig episode;
  TrainConfig train;
  StopRule stop;
};

struct CommonFlags {
  std::string config_path;
  std::string grid;
  std::optional<int> targets;
  std::optional<std::uint64_t> seed;
  std::string motion;
  std::optional<double> p_move;
  std::optional<double> reset_fraction;
};

void add_episode_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value file overriding defaults");
  cmd->add_option("--grid", f.grid, "grid size as WIDTHxHEIGHT");
  cmd->add_option("--targets", f.targets, "targets per episode");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--motion", f.motion, "static or random_walk");
  cmd->add_option("--p-move", f.p_move, "per-step move probability of a random-walk target");
  cmd->add_option("--reset-fraction", f.reset_fraction, "visited fraction that resets the memory map");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path);
  return out;
}

Settings load_settings(const CommonFlags& f) {
  Settings s;
  std::map<std::string, std::string> episode_keys;
  if (!f.config_path.empty()) {
    auto in = open_input(f.config_path);
    for (const auto& [key, value] : parse_key_values(in)) {
      if (key == "learning_rate") s.train.learning_rate = parse_double(value, key);
      else if (key == "momentum") s.train.momentum = parse_double(value, key);
      else if (key == "batch_size") s.train.batch_size = static_cast<int>(parse_integer(value, key));
      else if (key == "max_epochs") s.train.max_epochs = static_cast<int>(parse_integer(value, key));
      else if (key == "patience") s.train.patience = static_cast<int>(parse_integer(value, key));
      else if (key == "iteration_seconds") s.stop.iteration_seconds = parse_double(value, key);
      else if (key == "battery_seconds") s.stop.battery_seconds = parse_double(value, key);
      else if (key == "max_iterations") s.stop.max_iterations = static_cast<int>(parse_integer(value, key));
      else episode_keys[key] = value;
    }
  }
  if (!f.grid.empty()) {
    const auto parts = split(f.grid, 'x');
    if (parts.size() != 2) throw UsageError("--grid expects WIDTHxHEIGHT, got '" + f.grid + "'");
    episode_keys["width"] = parts[0];
    episode_keys["height"] = parts[1];
  }
  if (f.targets) episode_keys["num_targets"] = std::to_string(*f.targets);
  if (f.seed) episode_keys["seed"] = std::to_string(*f.seed);
  if (!f.motion.empty()) episode_keys["motion"] = f.motion;
  if (f.p_move) episode_keys["p_move"] = format_real(*f.p_move);
  if (f.reset_fraction) episode_keys["reset_fraction"] = format_real(*f.reset_fraction);
  s.episode = apply_overrides(s.episode, episode_keys);
  s.episode.validate();
  return s;
}

int default_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

NetworkShape shape_of(const Dataset& d) {
  NetworkShape shape;
  shape.sensory_side = d.sense_side();
  shape.grid_width = d.width();
  shape.grid_height = d.height();
  return shape;
}

void print_aggregate(const std::string& label, const std::vector<MissionRecord>& records, bool header) {
  std::vector<Metrics> metrics;
  for (const auto& r : records) metrics.push_back(compute_metrics(r));
  write_aggregate_csv(std::cout, label, aggregate(metrics), header);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Grid-world search, oracle labelling, policy training and mission tooling"};
  app.require_subcommand(1);

  // gen-episodes
  CommonFlags gen_flags;
  int gen_episodes = 100;
  std::string gen_out;
  std::string gen_teacher = "omniscient";
  int gen_workers = default_workers();
  auto* gen = app.add_subcommand("gen-episodes", "write an oracle-labelled dataset");
  add_episode_flags(gen, gen_flags);
  gen->add_option("--episodes", gen_episodes, "number of episodes")->check(CLI::NonNegativeNumber);
  gen->add_option("--out,-o", gen_out, "dataset file")->required();
  gen->add_option("--teacher", gen_teacher, "omniscient or seen_only");
  gen->add_option("--workers", gen_workers, "threads")->check(CLI::PositiveNumber);

  // train
  CommonFlags train_flags;
  std::string train_data;
  std::string train_out;
  std::string train_log;
  std::optional<int> train_epochs;
  int train_stride = 20;
  auto* train_cmd = app.add_subcommand("train", "fit the policy network on a dataset");
  add_episode_flags(train_cmd, train_flags);
  train_cmd->add_option("--data", train_data, "dataset file")->required();
  train_cmd->add_option("--out,-o", train_out, "params file")->required();
  train_cmd->add_option("--log", train_log, "epoch log CSV");
  train_cmd->add_option("--epochs", train_epochs, "maximum epochs");
  train_cmd->add_option("--validation-stride", train_stride,
                        "every n-th sample is held back for early stopping (0 disables)")
      ->check(CLI::NonNegativeNumber);

  // eval
  CommonFlags eval_flags;
  std::string eval_data;
  std::string eval_params;
  int eval_folds = 10;
  std::optional<int> eval_epochs;
  int eval_missions = 0;
  int eval_workers = default_workers();
  auto* eval = app.add_subcommand("eval", "cross-validate and compare against baselines");
  add_episode_flags(eval, eval_flags);
  eval->add_option("--data", eval_data, "dataset file for cross validation");
  eval->add_option("--folds", eval_folds, "cross-validation folds");
  eval->add_option("--epochs", eval_epochs, "maximum epochs per fold");
  eval->add_option("--params", eval_params, "trained params for the mission comparison");
  eval->add_option("--missions", eval_missions, "missions per policy for the baseline comparison")
      ->check(CLI::NonNegativeNumber);
  eval->add_option("--workers", eval_workers, "threads")->check(CLI::PositiveNumber);

  // run
  CommonFlags run_flags;
  std::string run_policy = "network";
  std::string run_params;
  std::optional<int> run_max_iter;
  std::optional<double> run_battery;
  int run_episodes = 1;
  int run_workers = default_workers();
  std::string run_records;
  std::string run_metrics;
  auto* run = app.add_subcommand("run", "fly simulated missions");
  add_episode_flags(run, run_flags);
  run->add_option("--policy", run_policy, "network, lawnmower or random");
  run->add_option("--params", run_params, "params file for the network policy");
  run->add_option("--max-iter", run_max_iter, "iteration cap")->check(CLI::NonNegativeNumber);
  run->add_option("--battery", run_battery, "battery budget in seconds");
  run->add_option("--episodes", run_episodes, "missions to fly")->check(CLI::NonNegativeNumber);
  run->add_option("--workers", run_workers, "threads")->check(CLI::PositiveNumber);
  run->add_option("--records", run_records, "mission record output (JSON lines)");
  run->add_option("--metrics", run_metrics, "per-mission metrics CSV");

  // render
  std::string render_records;
  std::size_t render_index = 0;
  std::string render_format = "ascii";
  std::string render_out;
  RenderSpec render_spec;
  auto* render_cmd = app.add_subcommand("render", "draw a mission path");
  render_cmd->add_option("--records", render_records, "mission record file")->required();
  render_cmd->add_option("--index", render_index, "which mission in the file");
  render_cmd->add_option("--format", render_format, "ascii, svg or ppm");
  render_cmd->add_option("--arrow-interval", render_spec.arrow_interval, "steps between arrows (0: none)");
  render_cmd->add_option("--cell-pixels", render_spec.cell_pixels, "pixels per grid cell");
  render_cmd->add_option("--out,-o", render_out, "output file (default stdout)");

  // geo
  auto* geo = app.add_subcommand("geo", "coordinate conversions and fence checks");
  geo->require_subcommand(1);
  GeodeticCoord geo_point;
  GeodeticCoord geo_ref;
  EcefCoord geo_ecef;
  auto add_point = [&](CLI::App* c) {
    c->add_option("--lat", geo_point.latitude, "latitude in degrees")->required();
    c->add_option("--lon", geo_point.longitude, "longitude in degrees")->required();
    c->add_option("--alt", geo_point.altitude, "altitude in metres");
  };
  auto add_ref = [&](CLI::App* c, bool required) {
    auto* a = c->add_option("--ref-lat", geo_ref.latitude, "reference latitude");
    auto* b = c->add_option("--ref-lon", geo_ref.longitude, "reference longitude");
    c->add_option("--ref-alt", geo_ref.altitude, "reference altitude");
    if (required) {
      a->required();
      b->required();
    }
  };
  auto* to_ecef = geo->add_subcommand("to-ecef", "geodetic to ECEF");
  add_point(to_ecef);
  auto* to_geodetic = geo->add_subcommand("to-geodetic", "ECEF to geodetic");
  to_geodetic->add_option("--x", geo_ecef.x)->required();
  to_geodetic->add_option("--y", geo_ecef.y)->required();
  to_geodetic->add_option("--z", geo_ecef.z)->required();
  auto* to_enu = geo->add_subcommand("to-enu", "geodetic to ENU about a reference");
  add_point(to_enu);
  add_ref(to_enu, true);
  std::string waypoint_action;
  double waypoint_cell = 2.0;
  double waypoint_bearing = 0.0;
  auto* waypoint = geo->add_subcommand("waypoint", "waypoint one grid move away");
  add_point(waypoint);
  waypoint->add_option("--action", waypoint_action, "N, W, S or E")->required();
  waypoint->add_option("--cell-size", waypoint_cell, "metres per grid cell");
  waypoint->add_option("--bearing", waypoint_bearing, "grid north bearing in degrees");
  std::string fence_path;
  auto* fence_check = geo->add_subcommand("fence-check", "test a point against a fence file");
  fence_check->add_option("--fence", fence_path, "fence file, one 'lat, lon' per line")->required();
  add_point(fence_check);
  add_ref(fence_check, false);

  // fuse-demo
  ObservationModel fuse_model;
  int fuse_frames = 5;
  int fuse_true = 0;
  std::uint64_t fuse_seed = 0;
  auto* fuse = app.add_subcommand("fuse-demo", "belief trajectory of a fused tracklet");
  fuse->add_option("--frames", fuse_frames, "frames per tracklet")->check(CLI::Range(1, 5));
  fuse->add_option("--classes", fuse_model.num_classes, "identity classes");
  fuse->add_option("--accuracy", fuse_model.accuracy, "single-frame accuracy");
  fuse->add_option("--true-class", fuse_true, "identity of the simulated individual");
  fuse->add_option("--seed", fuse_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (gen->parsed()) {
    const auto s = load_settings(gen_flags);
    DatasetOptions options{parse_teacher(gen_teacher), gen_workers};
    const Dataset data = generate_dataset(s.episode, gen_episodes, options);
    auto header = describe(s.episode);
    header["episodes"] = std::to_string(gen_episodes);
    header["teacher"] = gen_teacher;
    auto out = open_output(gen_out);
    write_dataset(out, data, header);
    std::cerr << "wrote " << data.size() << " samples from " << gen_episodes << " episodes\n";
  } else if (train_cmd->parsed()) {
    auto s = load_settings(train_flags);
    if (train_epochs) s.train.max_epochs = *train_epochs;
    auto in = open_input(train_data);
    const auto loaded = read_dataset(in);
    const Dataset& data = loaded.data;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (train_stride > 0 && i % static_cast<std::size_t>(train_stride) == 0) val_idx.push_back(i);
      else train_idx.push_back(i);
    }
    s.train.seed = s.episode.seed;
    NetworkParams params = NetworkParams::initialize(shape_of(data), s.episode.seed);
    std::ofstream log_file;
    std::ostream* log = nullptr;
    if (!train_log.empty()) {
      log_file = open_output(train_log);
      log_file << "epoch,step,loss,val_acc\n";
      log = &log_file;
    }
    const auto report = train(params, data, train_idx, val_idx, s.train, log);
    save_params(params, train_out);
    std::cerr << "trained " << report.epochs.size() << " epochs, best epoch " << report.best_epoch
              << ", validation accuracy " << format_real(report.best_val_accuracy) << '\n';
  } else if (eval->parsed()) {
    auto s = load_settings(eval_flags);
    if (eval_epochs) s.train.max_epochs = *eval_epochs;
    if (eval_data.empty() && eval_missions == 0) {
      throw UsageError("eval needs --data and/or --missions");
    }
    if (!eval_data.empty()) {
      auto in = open_input(eval_data);
      const auto loaded = read_dataset(in);
      s.train.seed = s.episode.seed;
      CrossValidationOptions options;
      options.folds = eval_folds;
      const auto cv = cross_validate(loaded.data, shape_of(loaded.data), s.train, options);
      std::cout << "fold,accuracy,train_size,test_size,epochs\n";
      for (std::size_t k = 0; k < cv.folds.size(); ++k) {
        const auto& f = cv.folds[k];
        std::cout << k << ',' << format_real(f.accuracy) << ',' << f.train_size << ','
                  << f.test_size << ',' << f.epochs << '\n';
      }
      std::cout << "mean," << format_real(cv.mean_accuracy) << ",,,\n";
    }
    if (eval_missions > 0) {
      StopRule stop = s.stop;
      if (!stop.max_iterations && !stop.battery_seconds) stop.battery_seconds = 489.0;
      bool header = true;
      if (!eval_params.empty()) {
        const auto params = load_params(eval_params, NetworkShape::for_episode(s.episode));
        print_aggregate("network", run_missions(PolicyKind::network, s.episode, eval_missions, stop, &params, eval_workers), header);
        header = false;
      }
      print_aggregate("lawnmower", run_missions(PolicyKind::lawnmower, s.episode, eval_missions, stop, nullptr, eval_workers), header);
      print_aggregate("random", run_missions(PolicyKind::random, s.episode, eval_missions, stop, nullptr, eval_workers), false);
    }
  } else if (run->parsed()) {
    auto s = load_settings(run_flags);
    const PolicyKind policy = parse_policy(run_policy);
    StopRule stop = s.stop;
    if (run_max_iter) stop.max_iterations = *run_max_iter;
    if (run_battery) stop.battery_seconds = *run_battery;
    std::optional<NetworkParams> params;
    if (policy == PolicyKind::network) {
      if (run_params.empty()) throw UsageError("--policy network needs --params");
      params = load_params(run_params, NetworkShape::for_episode(s.episode));
    }
    const auto records = run_missions(policy, s.episode, run_episodes, stop,
                                      params ? &*params : nullptr, run_workers);
    if (!run_records.empty()) {
      auto out = open_output(run_records);
      for (const auto& r : records) write_mission_record(out, r);
    }
    std::vector<Metrics> metrics;
    for (const auto& r : records) metrics.push_back(compute_metrics(r));
    if (!run_metrics.empty()) {
      auto out = open_output(run_metrics);
      write_metrics_csv(out, metrics);
    }
    if (!metrics.empty()) write_aggregate_csv(std::cout, run_policy, aggregate(metrics));
  } else if (render_cmd->parsed()) {
    const auto format = parse_render_format(render_format);
    auto in = open_input(render_records);
    const auto records = read_mission_records(in);
    if (render_index >= records.size()) {
      throw UsageError("record file holds " + std::to_string(records.size()) + " missions");
    }
    const auto image = render(records[render_index], render_spec, format);
    if (render_out.empty()) {
      std::cout << image;
    } else {
      auto out = open_output(render_out);
      out << image;
    }
  } else if (geo->parsed()) {
    if (to_ecef->parsed()) {
      const auto e = geodetic_to_ecef(geo_point);
      std::cout << format_real(e.x) << ' ' << format_real(e.y) << ' ' << format_real(e.z) << '\n';
    } else if (to_geodetic->parsed()) {
      const auto g = ecef_to_geodetic(geo_ecef);
      std::cout << format_real(g.latitude) << ' ' << format_real(g.longitude) << ' '
                << format_real(g.altitude) << '\n';
    } else if (to_enu->parsed()) {
      const auto e = geodetic_to_enu(geo_point, geo_ref);
      std::cout << format_real(e.east) << ' ' << format_real(e.north) << ' ' << format_real(e.up) << '\n';
    } else if (waypoint->parsed()) {
      const auto action = waypoint_action.size() == 1 ? parse_action(waypoint_action[0]) : std::nullopt;
      if (!action) throw UsageError("--action must be one of N, W, S, E");
      const auto g = action_to_waypoint(geo_point, *action, waypoint_cell, waypoint_bearing);
      std::cout << format_real(g.latitude) << ' ' << format_real(g.longitude) << ' '
                << format_real(g.altitude) << '\n';
    } else if (fence_check->parsed()) {
      auto in = open_input(fence_path);
      const auto fence = read_fence(in);
      const bool have_ref = fence_check->get_option("--ref-lat")->count() > 0;
      const GeodeticCoord ref = have_ref ? geo_ref : fence.vertices.front();
      std::cout << (geofence_contains(fence, geo_point, ref) ? "inside" : "outside") << '\n';
    }
  } else if (fuse->parsed()) {
    fuse_model.validate();
    if (fuse_true < 0 || fuse_true >= fuse_model.num_classes) {
      throw UsageError("--true-class must lie in [0, classes)");
    }
    Rng rng = make_rng(fuse_seed, 0);
    std::vector<std::vector<double>> frames;
    for (int f = 0; f < fuse_frames; ++f) frames.push_back(observe_identity(fuse_true, fuse_model, rng));
    write_belief_csv(std::cout, fuse_identity(frames));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
