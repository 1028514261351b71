#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "skyherd/errors.hpp"
#include "skyherd/harness.hpp"
#include "skyherd/oracle.hpp"
#include "skyherd/random.hpp"

namespace skyherd {

namespace {

constexpr std::uint64_t kRandomPolicyStream = 0x706f6c696379ULL;

// Boustrophedon relative to the start row: even offsets sweep east, odd west.
std::optional<Action> lawnmower_step(GridPos agent, GridPos start, int width, int height) {
  const bool eastward = (agent.row - start.row) % 2 == 0;
  if (eastward && agent.col + 1 < width) return Action::E;
  if (!eastward && agent.col > 0) return Action::W;
  if (agent.row + 1 < height) return Action::S;
  return std::nullopt;
}

}  // namespace

const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::network: return "network";
    case PolicyKind::lawnmower: return "lawnmower";
    case PolicyKind::random: return "random";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "network") return PolicyKind::network;
  if (name == "lawnmower") return PolicyKind::lawnmower;
  if (name == "random") return PolicyKind::random;
  throw ConfigError("unknown policy '" + name + "' (network, lawnmower, random)");
}

void StopRule::validate() const {
  if (max_iterations && *max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (battery_seconds && !(*battery_seconds >= 0.0 && std::isfinite(*battery_seconds))) {
    throw ConfigError("battery_seconds must be finite and >= 0");
  }
  if (!(iteration_seconds > 0.0 && std::isfinite(iteration_seconds))) {
    throw ConfigError("iteration_seconds must be positive");
  }
}

std::optional<int> StopRule::iteration_limit() const {
  std::optional<int> limit = max_iterations;
  if (battery_seconds) {
    auto n = static_cast<long long>(std::floor(*battery_seconds / iteration_seconds + 1e-9));
    while (n > 0 && static_cast<double>(n) * iteration_seconds > *battery_seconds + 1e-9) --n;
    const int by_battery = static_cast<int>(std::min<long long>(n, 1LL << 30));
    limit = limit ? std::min(*limit, by_battery) : by_battery;
  }
  return limit;
}

std::vector<GridPos> MissionRecord::path() const {
  std::vector<GridPos> out{config.start};
  for (const auto& s : steps) out.push_back(displaced(s.agent, s.action));
  return out;
}

MissionRecord run_mission(PolicyKind policy, const EpisodeConfig& config, const StopRule& stop,
                          const NetworkParams* params) {
  config.validate();
  stop.validate();
  const auto limit = stop.iteration_limit();
  if (policy == PolicyKind::network) {
    if (params == nullptr) throw ContractViolation("network policy needs parameters");
    if (!(params->shape() == NetworkShape::for_episode(config))) {
      throw ContractViolation("network parameters do not match the episode geometry");
    }
  }
  if (!limit && policy != PolicyKind::lawnmower) {
    throw ConfigError("a " + std::string(policy_name(policy)) +
                      " mission needs max_iterations or battery_seconds");
  }

  MissionRecord record;
  record.policy = policy;
  record.config = config;
  record.iteration_seconds = stop.iteration_seconds;

  EpisodeState state = register_sightings(spawn_episode(config));
  MemoryMap memory = MemoryMap::initial(config);
  SensoryMap sensed = sense(state);
  memory = update_memory(std::move(memory), state, sensed);
  Rng rng = make_rng(config.seed, kRandomPolicyStream);

  for (int i = 0; !limit || i < *limit; ++i) {
    MissionStep step;
    step.step = i;
    step.agent = state.agent;
    step.sensed = sensed;
    const ActionSet legal = legal_actions(state);
    const auto sweep = lawnmower_step(state.agent, config.start, config.width, config.height);
    if (policy == PolicyKind::lawnmower && !sweep) break;
    switch (policy) {
      case PolicyKind::network:
        step.scores = forward(*params, sensed, memory);
        step.action = select_action(*step.scores, legal);
        break;
      case PolicyKind::random: {
        const auto options = legal.to_vector();
        step.action = options[uniform_below(rng, options.size())];
        break;
      }
      case PolicyKind::lawnmower:
        step.action = *sweep;
        break;
    }
    const int before = state.recovered_count;
    state = apply_action(std::move(state), step.action);
    step.recoveries = state.recovered_count - before;
    step.clock = static_cast<double>(i + 1) * stop.iteration_seconds;
    sensed = sense(state);
    memory = update_memory(std::move(memory), state, sensed);
    record.steps.push_back(std::move(step));
  }
  record.final_agent = state.agent;
  record.recovered = state.recovered_count;
  return record;
}

MissionRecord run_lawnmower(const EpisodeConfig& config, const StopRule& stop) {
  return run_mission(PolicyKind::lawnmower, config, stop);
}

std::vector<MissionRecord> run_missions(PolicyKind policy, const EpisodeConfig& master, int episodes,
                                        const StopRule& stop, const NetworkParams* params,
                                        int workers) {
  if (episodes < 0) throw ConfigError("episode count must be non-negative");
  std::vector<MissionRecord> records(static_cast<std::size_t>(episodes));
  workers = std::clamp(workers, 1, std::max(1, episodes));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      for (int e = w; e < episodes; e += workers) {
        records[static_cast<std::size_t>(e)] =
            run_mission(policy, episode_config(master, static_cast<std::uint64_t>(e)), stop, params);
      }
    } catch (...) {
      failures[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return records;
}

}  // namespace skyherd
