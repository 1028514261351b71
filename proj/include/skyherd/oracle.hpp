#pragma once

#include <cstdint>

#include "skyherd/dataset.hpp"
#include "skyherd/grid_world.hpp"
#include "skyherd/tsp.hpp"

namespace skyherd {

// Which targets the label teacher plans over.
enum class Teacher {
  omniscient,  // every unrecovered target
  seen_only,   // unrecovered targets already sighted; omniscient while none are
};

const char* teacher_name(Teacher t);
Teacher parse_teacher(const std::string& name);  // throws ConfigError

// Moves that lie on some minimum-length open tour over the unrecovered
// targets. Empty once every target has been recovered.
ActionSet optimal_first_actions(const EpisodeState& state, Teacher teacher = Teacher::omniscient);

struct DatasetOptions {
  Teacher teacher = Teacher::omniscient;
  // Episodes are split across this many threads; output order and bytes do
  // not depend on it.
  int workers = 1;
};

// Episode i is spawned with seed derive_seed(config.seed, i). The agent
// follows the teacher's highest-priority optimal move until every target is
// recovered, and one sample is emitted before each move. Targets must be
// static (ConfigError otherwise).
Dataset generate_dataset(const EpisodeConfig& config, int num_episodes,
                         const DatasetOptions& options = {});

// Seed of the i-th episode derived from a master configuration.
EpisodeConfig episode_config(const EpisodeConfig& master, std::uint64_t index);

}  // namespace skyherd
