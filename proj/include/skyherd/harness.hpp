#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "skyherd/grid_world.hpp"
#include "skyherd/policy_net.hpp"

namespace skyherd {

inline constexpr double kIterationSeconds = 6.35;

enum class PolicyKind { network, lawnmower, random };

const char* policy_name(PolicyKind kind);
PolicyKind parse_policy(const std::string& name);  // throws ConfigError

// At least one limit must be set, except for the lawnmower which ends on its
// own when the sweep is complete.
struct StopRule {
  std::optional<int> max_iterations;
  std::optional<double> battery_seconds;
  double iteration_seconds = kIterationSeconds;

  void validate() const;  // throws ConfigError
  // Largest iteration count allowed by both limits; nullopt when unlimited.
  std::optional<int> iteration_limit() const;
};

struct MissionStep {
  int step = 0;
  GridPos agent;  // position before the move
  SensoryMap sensed;
  std::optional<ActionScores> scores;  // network policy only
  Action action = Action::N;
  int recoveries = 0;
  double clock = 0.0;  // simulated seconds after the move
};

struct MissionRecord {
  PolicyKind policy = PolicyKind::lawnmower;
  EpisodeConfig config;
  double iteration_seconds = kIterationSeconds;
  std::vector<MissionStep> steps;
  GridPos final_agent;
  int recovered = 0;

  std::vector<GridPos> path() const;  // start followed by every position reached
};

// Throws ContractViolation when the network's shape does not fit the episode,
// or when the network policy is requested without parameters.
MissionRecord run_mission(PolicyKind policy, const EpisodeConfig& config, const StopRule& stop,
                          const NetworkParams* params = nullptr);

MissionRecord run_lawnmower(const EpisodeConfig& config, const StopRule& stop = {});

// Missions for episode_config(master, 0..episodes-1), in episode order.
std::vector<MissionRecord> run_missions(PolicyKind policy, const EpisodeConfig& master, int episodes,
                                        const StopRule& stop, const NetworkParams* params = nullptr,
                                        int workers = 1);

struct Metrics {
  double coverage_fraction = 0.0;
  int iterations = 0;
  int recovered = 0;
  double targets_per_move = 0.0;
  double wall_budget_s = 0.0;
};

// Coverage counts the distinct cells on the path.
Metrics compute_metrics(const MissionRecord& record);

struct Statistic {
  double median = 0.0;  // lower middle for even counts
  double mean = 0.0;
  double sd = 0.0;      // sample standard deviation, 0 for a single value
};

struct Aggregate {
  std::size_t count = 0;
  Statistic coverage_fraction;
  Statistic iterations;
  Statistic recovered;
  Statistic targets_per_move;
};

Statistic summarize(std::vector<double> values);  // throws DomainError when empty
Aggregate aggregate(const std::vector<Metrics>& metrics);

void write_metrics_csv(std::ostream& out, const std::vector<Metrics>& metrics);
void write_aggregate_csv(std::ostream& out, const std::string& label, const Aggregate& agg,
                         bool header = true);

// ---- Rendering ----

enum class CellState { unvisited, seen, visited, target, finish, start };
inline constexpr int kCellStateCount = 6;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct RenderSpec {
  std::array<Rgb, kCellStateCount> colours{{
      {0, 0, 0},        // unvisited
      {0, 0, 139},      // seen
      {173, 216, 230},  // visited
      {255, 0, 0},      // target
      {0, 160, 0},      // finish
      {255, 140, 0},    // start
  }};
  Rgb arrow{255, 255, 255};
  int arrow_interval = 5;  // 0 disables arrows
  int cell_pixels = 16;

  void validate() const;  // throws ConfigError
};

enum class RenderFormat { ascii, svg, ppm };
RenderFormat parse_render_format(const std::string& name);  // throws UsageError

// Row-major states, with precedence start > finish > target > visited > seen.
std::vector<CellState> classify_cells(const MissionRecord& record);

std::string render(const MissionRecord& record, const RenderSpec& spec, RenderFormat format);

// ---- Mission records ----

// Line-delimited JSON: a header object, one object per step, a summary.
void write_mission_record(std::ostream& out, const MissionRecord& record);
std::vector<MissionRecord> read_mission_records(std::istream& in);  // throws DatasetError

}  // namespace skyherd
