#include <algorithm>
#include <exception>
#include <optional>
#include <thread>

#include "skyherd/errors.hpp"
#include "skyherd/oracle.hpp"
#include "skyherd/random.hpp"

namespace skyherd {

const char* teacher_name(Teacher t) {
  return t == Teacher::omniscient ? "omniscient" : "seen_only";
}

Teacher parse_teacher(const std::string& name) {
  if (name == "omniscient") return Teacher::omniscient;
  if (name == "seen_only" || name == "seen-only") return Teacher::seen_only;
  throw ConfigError("unknown teacher '" + name + "'");
}

EpisodeConfig episode_config(const EpisodeConfig& master, std::uint64_t index) {
  EpisodeConfig cfg = master;
  cfg.seed = derive_seed(master.seed, index);
  return cfg;
}

namespace {

// Distinct cells of the targets the teacher plans over.
std::vector<GridPos> planning_cities(const EpisodeState& state, Teacher teacher) {
  std::vector<GridPos> cities;
  auto collect = [&](bool require_seen) {
    for (const auto& t : state.targets) {
      if (t.recovered || (require_seen && !t.seen)) continue;
      if (std::find(cities.begin(), cities.end(), t.pos) == cities.end()) cities.push_back(t.pos);
    }
  };
  if (teacher == Teacher::seen_only) collect(true);
  if (cities.empty()) collect(false);
  return cities;
}

ActionSet optimal_moves(const PathCostTable& table, std::uint32_t remaining, GridPos agent,
                        int width, int height) {
  ActionSet best;
  if (remaining == 0) return best;
  const int optimum = table.cost_from(agent, remaining);
  for (Action a : legal_actions(agent, width, height).to_vector()) {
    if (1 + table.cost_from(displaced(agent, a), remaining) == optimum) best.insert(a);
  }
  return best;
}

}  // namespace

ActionSet optimal_first_actions(const EpisodeState& state, Teacher teacher) {
  if (state.unrecovered() == 0) return {};
  const PathCostTable table(planning_cities(state, teacher));
  return optimal_moves(table, table.full_mask(), state.agent, state.config.width,
                       state.config.height);
}

namespace {

// Teacher plan for one episode. Rebuilt only when the planned city set
// changes; afterwards each step only clears bits.
class TeacherPlan {
 public:
  explicit TeacherPlan(Teacher teacher) : teacher_(teacher) {}

  Action next(const EpisodeState& state) {
    auto cities = planning_cities(state, teacher_);
    if (!table_ || cities != planned_) {
      table_.emplace(cities);
      planned_ = std::move(cities);
    }
    const auto moves = optimal_moves(*table_, table_->full_mask(), state.agent,
                                     state.config.width, state.config.height);
    return moves.first();
  }

 private:
  Teacher teacher_;
  std::vector<GridPos> planned_;
  std::optional<PathCostTable> table_;
};

// Static targets: one table for the whole episode, recoveries only clear
// bits in the remaining-set mask.
class OmniscientPlan {
 public:
  explicit OmniscientPlan(const EpisodeState& state) {
    std::vector<GridPos> cities;
    for (const auto& t : state.targets) cities.push_back(t.pos);
    table_.emplace(std::move(cities));
  }

  Action next(const EpisodeState& state) const {
    std::uint32_t remaining = 0;
    for (std::size_t k = 0; k < state.targets.size(); ++k) {
      if (!state.targets[k].recovered) remaining |= 1u << k;
    }
    return optimal_moves(*table_, remaining, state.agent, state.config.width, state.config.height)
        .first();
  }

 private:
  std::optional<PathCostTable> table_;
};

void run_episode(const EpisodeConfig& cfg, Teacher teacher, Dataset& out) {
  EpisodeState state = register_sightings(spawn_episode(cfg));
  MemoryMap memory = MemoryMap::initial(cfg);
  SensoryMap sensed = sense(state);
  memory = update_memory(std::move(memory), state, sensed);

  std::optional<OmniscientPlan> omniscient;
  std::optional<TeacherPlan> partial;
  if (teacher == Teacher::omniscient) {
    omniscient.emplace(state);
  } else {
    partial.emplace(teacher);
  }

  while (state.unrecovered() > 0) {
    const Action label = omniscient ? omniscient->next(state) : partial->next(state);
    out.push_back(sensed, memory, label);
    state = apply_action(std::move(state), label);
    sensed = sense(state);
    memory = update_memory(std::move(memory), state, sensed);
  }
}

}  // namespace

Dataset generate_dataset(const EpisodeConfig& config, int num_episodes,
                         const DatasetOptions& options) {
  config.validate();
  if (config.motion.kind != MotionKind::fixed) {
    throw ConfigError("label generation requires static targets");
  }
  if (num_episodes < 0) throw ConfigError("num_episodes must be non-negative");

  const int workers = std::clamp(options.workers, 1, std::max(1, num_episodes));
  std::vector<Dataset> shards(static_cast<std::size_t>(workers),
                              Dataset(config.sense_side(), config.width, config.height));
  // Contiguous episode ranges per worker, concatenated in order afterwards.
  auto run_shard = [&](int w) {
    const int begin = static_cast<int>(static_cast<long long>(num_episodes) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(num_episodes) * (w + 1) / workers);
    for (int e = begin; e < end; ++e) {
      run_episode(episode_config(config, static_cast<std::uint64_t>(e)), options.teacher,
                  shards[static_cast<std::size_t>(w)]);
    }
  };
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      run_shard(w);
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
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  Dataset data(config.sense_side(), config.width, config.height);
  for (const auto& shard : shards) data.append(shard);
  return data;
}

}  // namespace skyherd
