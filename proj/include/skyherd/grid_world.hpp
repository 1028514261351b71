#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace skyherd {

// Row 0 is the northern edge; columns grow eastward.
struct GridPos {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const GridPos&, const GridPos&) = default;
};

enum class Action : std::uint8_t { N = 0, W = 1, S = 2, E = 3 };

// Priority order used for every tie-break: N > W > S > E.
inline constexpr std::array<Action, 4> kActions{Action::N, Action::W, Action::S, Action::E};

inline constexpr int index_of(Action a) { return static_cast<int>(a); }

GridPos displaced(GridPos from, Action a);
char action_symbol(Action a);
std::optional<Action> parse_action(char symbol);

// Small set of actions backed by a bitmask; iterates in priority order.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr ActionSet(std::initializer_list<Action> actions) {
    for (Action a : actions) insert(a);
  }

  constexpr void insert(Action a) { bits_ |= static_cast<std::uint8_t>(1u << index_of(a)); }
  constexpr bool contains(Action a) const { return (bits_ >> index_of(a)) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  int size() const;
  // Highest-priority member. Precondition: !empty().
  Action first() const;
  std::vector<Action> to_vector() const;

  friend constexpr bool operator==(ActionSet, ActionSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

enum class MotionKind { fixed, random_walk };

struct MotionModel {
  MotionKind kind = MotionKind::fixed;
  // Probability that an unrecovered target attempts a move in one step.
  double p_move = 0.0;

  static MotionModel stationary() { return {}; }
  static MotionModel random_walk(double p_move) { return {MotionKind::random_walk, p_move}; }
};

struct EpisodeConfig {
  int width = 20;
  int height = 20;
  int num_targets = 17;
  int sense_half_width = 2;
  // Memory reset fires once this fraction of the grid has been visited.
  double reset_fraction = 0.9;
  MotionModel motion;
  GridPos start{0, 0};
  std::uint64_t seed = 0;

  int cells() const { return width * height; }
  int sense_side() const { return 2 * sense_half_width + 1; }
  bool in_bounds(GridPos p) const {
    return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
  }
  // Throws ConfigError.
  void validate() const;
};

// Applies `key=value` overrides (width, height, num_targets, sense_half_width,
// reset_fraction, motion, p_move, start_row, start_col, seed) on top of `base`.
EpisodeConfig apply_overrides(EpisodeConfig base, const std::map<std::string, std::string>& values);
EpisodeConfig read_episode_config(std::istream& in, EpisodeConfig base = {});
std::map<std::string, std::string> describe(const EpisodeConfig& config);

struct TargetState {
  GridPos pos;
  bool recovered = false;
  bool seen = false;
};

struct EpisodeState {
  EpisodeConfig config;
  GridPos agent;
  std::vector<TargetState> targets;
  int step_count = 0;
  int recovered_count = 0;

  int unrecovered() const { return static_cast<int>(targets.size()) - recovered_count; }
};

// Square local occupancy window centred on the agent.
class SensoryMap {
 public:
  explicit SensoryMap(int side = 5);

  int side() const { return side_; }
  bool at(int row, int col) const { return cells_[index(row, col)] != 0; }
  void set(int row, int col, bool value) { cells_[index(row, col)] = value ? 1 : 0; }
  std::span<const std::uint8_t> cells() const { return cells_; }
  int count() const;

  friend bool operator==(const SensoryMap&, const SensoryMap&) = default;

 private:
  std::size_t index(int row, int col) const;

  int side_;
  std::vector<std::uint8_t> cells_;
};

enum class Plane : int {
  visited = 0,
  seen = 1,
  target_seen = 2,
  target_recovered = 3,
  agent_current = 4,
  agent_start = 5,
};
inline constexpr int kPlaneCount = 6;

// Long-term exploration history, stored plane-major: plane, row, col.
class MemoryMap {
 public:
  MemoryMap(int width, int height);

  // Start cell marked in agent_start, agent_current, visited and seen.
  static MemoryMap initial(const EpisodeConfig& config);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(Plane plane, GridPos p) const { return planes_[index(plane, p)] != 0; }
  void set(Plane plane, GridPos p, bool value) { planes_[index(plane, p)] = value ? 1 : 0; }
  void clear(Plane plane);
  int count(Plane plane) const;
  // Position of the single agent_current cell.
  GridPos agent() const;

  std::span<const std::uint8_t> raw() const { return planes_; }

  friend bool operator==(const MemoryMap&, const MemoryMap&) = default;

 private:
  std::size_t index(Plane plane, GridPos p) const;

  int width_;
  int height_;
  std::vector<std::uint8_t> planes_;
};

EpisodeState spawn_episode(const EpisodeConfig& config);

// Whether `p` lies inside the agent's sensing window.
bool in_sensor_range(const EpisodeState& state, GridPos p);

// Marks every unrecovered target currently inside the sensing window as seen.
EpisodeState register_sightings(EpisodeState state);

SensoryMap sense(const EpisodeState& state);

ActionSet legal_actions(GridPos agent, int width, int height);
ActionSet legal_actions(const EpisodeState& state);

// Moves the agent, recovers co-located targets, advances the step counter,
// moves targets per the motion model, then registers sightings.
// Throws ContractViolation on an illegal action.
EpisodeState apply_action(EpisodeState state, Action action);

MemoryMap update_memory(MemoryMap memory, const EpisodeState& state, const SensoryMap& sensed);

}  // namespace skyherd
