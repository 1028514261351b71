#include "skyherd/grid_world.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <numeric>

#include "skyherd/errors.hpp"
#include "skyherd/random.hpp"

namespace skyherd {

namespace {

// Stream tag separating target-motion draws from placement draws.
constexpr std::uint64_t kMotionStream = 1ULL << 40;

}  // namespace

GridPos displaced(GridPos from, Action a) {
  switch (a) {
    case Action::N: return {from.row - 1, from.col};
    case Action::W: return {from.row, from.col - 1};
    case Action::S: return {from.row + 1, from.col};
    case Action::E: return {from.row, from.col + 1};
  }
  return from;
}

char action_symbol(Action a) {
  static constexpr char kSymbols[] = {'N', 'W', 'S', 'E'};
  return kSymbols[index_of(a)];
}

std::optional<Action> parse_action(char symbol) {
  switch (symbol) {
    case 'N': return Action::N;
    case 'W': return Action::W;
    case 'S': return Action::S;
    case 'E': return Action::E;
    default: return std::nullopt;
  }
}

int ActionSet::size() const { return std::popcount(bits_); }

Action ActionSet::first() const {
  for (Action a : kActions) {
    if (contains(a)) return a;
  }
  throw ContractViolation("ActionSet::first on empty set");
}

std::vector<Action> ActionSet::to_vector() const {
  std::vector<Action> out;
  for (Action a : kActions) {
    if (contains(a)) out.push_back(a);
  }
  return out;
}

SensoryMap::SensoryMap(int side) : side_(side), cells_(static_cast<std::size_t>(side * side), 0) {
  if (side < 1) throw ContractViolation("sensory map side must be >= 1");
}

std::size_t SensoryMap::index(int row, int col) const {
  return static_cast<std::size_t>(row * side_ + col);
}

int SensoryMap::count() const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

MemoryMap::MemoryMap(int width, int height)
    : width_(width), height_(height),
      planes_(static_cast<std::size_t>(kPlaneCount * width * height), 0) {}

MemoryMap MemoryMap::initial(const EpisodeConfig& config) {
  MemoryMap memory(config.width, config.height);
  memory.set(Plane::agent_start, config.start, true);
  memory.set(Plane::agent_current, config.start, true);
  memory.set(Plane::visited, config.start, true);
  memory.set(Plane::seen, config.start, true);
  return memory;
}

std::size_t MemoryMap::index(Plane plane, GridPos p) const {
  return static_cast<std::size_t>((static_cast<int>(plane) * height_ + p.row) * width_ + p.col);
}

void MemoryMap::clear(Plane plane) {
  const auto begin = planes_.begin() + static_cast<std::ptrdiff_t>(index(plane, {0, 0}));
  std::fill(begin, begin + width_ * height_, std::uint8_t{0});
}

int MemoryMap::count(Plane plane) const {
  const auto begin = planes_.begin() + static_cast<std::ptrdiff_t>(index(plane, {0, 0}));
  return static_cast<int>(std::count(begin, begin + width_ * height_, std::uint8_t{1}));
}

GridPos MemoryMap::agent() const {
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (at(Plane::agent_current, {r, c})) return {r, c};
    }
  }
  throw ContractViolation("memory map has no agent_current cell");
}

EpisodeState spawn_episode(const EpisodeConfig& config) {
  config.validate();
  EpisodeState state;
  state.config = config;
  state.agent = config.start;

  // Partial Fisher-Yates over the free cells in row-major order.
  std::vector<int> free_cells;
  free_cells.reserve(static_cast<std::size_t>(config.cells()));
  const int start_index = config.start.row * config.width + config.start.col;
  for (int i = 0; i < config.cells(); ++i) {
    if (i != start_index) free_cells.push_back(i);
  }
  Rng rng = make_rng(config.seed, 0);
  state.targets.reserve(static_cast<std::size_t>(config.num_targets));
  for (int k = 0; k < config.num_targets; ++k) {
    const auto remaining = free_cells.size() - static_cast<std::size_t>(k);
    const auto pick = static_cast<std::size_t>(k) + uniform_below(rng, remaining);
    std::swap(free_cells[static_cast<std::size_t>(k)], free_cells[pick]);
    const int cell = free_cells[static_cast<std::size_t>(k)];
    state.targets.push_back({{cell / config.width, cell % config.width}, false, false});
  }
  return state;
}

bool in_sensor_range(const EpisodeState& state, GridPos p) {
  const int h = state.config.sense_half_width;
  return std::abs(p.row - state.agent.row) <= h && std::abs(p.col - state.agent.col) <= h;
}

EpisodeState register_sightings(EpisodeState state) {
  for (auto& t : state.targets) {
    if (!t.recovered && in_sensor_range(state, t.pos)) t.seen = true;
  }
  return state;
}

SensoryMap sense(const EpisodeState& state) {
  const int h = state.config.sense_half_width;
  SensoryMap map(state.config.sense_side());
  for (const auto& t : state.targets) {
    if (t.recovered || !in_sensor_range(state, t.pos)) continue;
    map.set(t.pos.row - state.agent.row + h, t.pos.col - state.agent.col + h, true);
  }
  return map;
}

ActionSet legal_actions(GridPos agent, int width, int height) {
  ActionSet legal;
  for (Action a : kActions) {
    const GridPos next = displaced(agent, a);
    if (next.row >= 0 && next.row < height && next.col >= 0 && next.col < width) legal.insert(a);
  }
  return legal;
}

ActionSet legal_actions(const EpisodeState& state) {
  return legal_actions(state.agent, state.config.width, state.config.height);
}

namespace {

void advance_targets(EpisodeState& state) {
  const auto& motion = state.config.motion;
  if (motion.kind != MotionKind::random_walk) return;
  Rng rng = make_rng(state.config.seed, kMotionStream + static_cast<std::uint64_t>(state.step_count));
  for (auto& t : state.targets) {
    if (t.recovered) continue;
    if (uniform01(rng) >= motion.p_move) continue;
    // Four neighbours plus staying put, uniformly; blocked moves stay.
    const auto choice = uniform_below(rng, 5);
    if (choice == 4) continue;
    const GridPos next = displaced(t.pos, kActions[choice]);
    if (state.config.in_bounds(next)) t.pos = next;
  }
}

}  // namespace

EpisodeState apply_action(EpisodeState state, Action action) {
  if (!legal_actions(state).contains(action)) {
    throw ContractViolation(std::string("illegal action ") + action_symbol(action) + " at (" +
                            std::to_string(state.agent.row) + "," +
                            std::to_string(state.agent.col) + ")");
  }
  state.agent = displaced(state.agent, action);
  for (auto& t : state.targets) {
    if (!t.recovered && t.pos == state.agent) {
      t.recovered = true;
      t.seen = true;
      ++state.recovered_count;
    }
  }
  ++state.step_count;
  advance_targets(state);
  return register_sightings(std::move(state));
}

MemoryMap update_memory(MemoryMap memory, const EpisodeState& state, const SensoryMap& sensed) {
  const auto& cfg = state.config;
  if (memory.width() != cfg.width || memory.height() != cfg.height) {
    throw ContractViolation("memory map is " + std::to_string(memory.width()) + "x" +
                            std::to_string(memory.height()) + ", episode grid is " +
                            std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
  }
  if (sensed.side() != cfg.sense_side()) {
    throw ContractViolation("sensory map side " + std::to_string(sensed.side()) +
                            " does not match sensing window " + std::to_string(cfg.sense_side()));
  }

  memory.clear(Plane::agent_current);
  memory.set(Plane::agent_current, state.agent, true);
  memory.set(Plane::visited, state.agent, true);

  const int h = cfg.sense_half_width;
  for (int r = 0; r < sensed.side(); ++r) {
    for (int c = 0; c < sensed.side(); ++c) {
      const GridPos world{state.agent.row + r - h, state.agent.col + c - h};
      if (!cfg.in_bounds(world)) continue;
      memory.set(Plane::seen, world, true);
      if (sensed.at(r, c)) memory.set(Plane::target_seen, world, true);
    }
  }
  for (const auto& t : state.targets) {
    if (t.recovered) memory.set(Plane::target_recovered, t.pos, true);
  }

  const double threshold = cfg.reset_fraction * cfg.cells();
  if (memory.count(Plane::visited) >= threshold - 1e-9) {
    memory.clear(Plane::visited);
    memory.clear(Plane::seen);
    memory.clear(Plane::target_seen);
    memory.set(Plane::visited, state.agent, true);
    memory.set(Plane::seen, state.agent, true);
  }
  return memory;
}

}  // namespace skyherd
